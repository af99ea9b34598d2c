"""
Complex Extensions
Analytic signals, half-plane and ILW strip extensions, analyticity
certificates, and unique-continuation probes for (f, Hf) and (f, L_delta d_x f)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from diagnostics import VanishingOrderReport, vanishing_order_fit
from models import EquationSpec, ModelTag, SimState, rhs
from spectral_core import (
    TWO_PI,
    Field,
    MultiplierSymbol,
    TorusGrid,
    apply_multiplier,
    derivative,
    derivative_values,
    forward_transform,
    hilbert,
    ilw_apply,
    inverse_transform,
    symbol_values,
)

logger = logging.getLogger(__name__)

KINDS = ("half-plane", "strip")
PARTNERS = ("hilbert", "ilw_dx")
# Strip heights above this fraction of 2*delta are refused
GUARD_FRACTION = 0.95
MIN_INTERVAL_POINTS = 8

CONSISTENT = "consistent-with-uniqueness"
VIOLATION = "violation-candidate"


@dataclass(frozen=True, eq=False)
class ExtensionGrid:
    """Complex samples F(x_j + i y_m); row m of values belongs to heights[m]"""
    grid: TorusGrid
    heights: np.ndarray
    values: np.ndarray
    kind: str = "half-plane"
    delta: Optional[float] = None

    def __post_init__(self):
        heights = np.array(self.heights, dtype=np.float64)
        values = np.array(self.values, dtype=np.complex128)
        _check_heights(heights)
        if values.shape != (heights.size, self.grid.n):
            raise ValueError(f"values must have shape {(heights.size, self.grid.n)}, got {values.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "strip":
            if self.delta is None or self.delta <= 0:
                raise ValueError("strip extension requires delta > 0")
            if heights[-1] >= 2.0 * self.delta:
                raise ValueError(f"height {heights[-1]:g} outside strip of analyticity (2*delta={2 * self.delta:g})")
        heights.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "values", values)

    def row(self, m: int) -> Field:
        return Field(self.grid, self.values[m])


@dataclass
class UCReport:
    """Sup/inf of |f| and |partner(f)| on an interval, with the verdict"""
    interval: Tuple[float, float]
    partner: str
    sup_f: float
    inf_f: float
    sup_partner: float
    inf_partner: float
    f_norm: float
    verdict: str
    delta: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "interval": list(self.interval),
            "partner": self.partner,
            "delta": self.delta,
            "sup_f": self.sup_f,
            "inf_f": self.inf_f,
            "sup_partner": self.sup_partner,
            "inf_partner": self.inf_partner,
            "f_norm": self.f_norm,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def _check_heights(heights: np.ndarray):
    if heights.ndim != 1 or heights.size == 0:
        raise ValueError("heights must be a non-empty list")
    if not np.all(np.isfinite(heights)):
        raise ValueError("heights must be finite")
    if np.any(heights < 0):
        raise ValueError(f"negative height {float(heights.min()):g}")
    if heights[0] != 0.0:
        raise ValueError("heights must start at 0")
    if np.any(np.diff(heights) <= 0):
        raise ValueError("heights must increase strictly")


def _require_real(f: Field):
    if not f.is_real:
        raise ValueError("expected a real-valued field")


def analytic_signal_symbol() -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: 1.0 + np.sign(xi), "general", "analytic signal")


def analytic_signal(f: Field) -> Field:
    """f + iHf: positive frequencies doubled, negative removed, mean kept"""
    _require_real(f)
    return apply_multiplier(f, analytic_signal_symbol())


def _extension_rows(f: Field, symbols: Sequence[MultiplierSymbol]) -> np.ndarray:
    grid = f.grid
    multipliers = np.stack([symbol_values(grid, s) for s in symbols])
    return inverse_transform(grid, multipliers * f.spectrum)


def halfplane_extend(f: Field, heights: Sequence[float]) -> ExtensionGrid:
    """Analytic extension of f + iHf to the upper half-plane

    Row y multiplies the analytic-signal spectrum by exp(-2 pi xi y); on the
    torus this is the disk extension written in annulus coordinates.
    """
    _require_real(f)
    heights = np.asarray(heights, dtype=np.float64)
    _check_heights(heights)

    def row_symbol(y):
        return MultiplierSymbol(lambda xi: (1.0 + np.sign(xi)) * np.exp(-TWO_PI * np.abs(xi) * y),
                                "general", f"half-plane row y={y:g}")

    values = _extension_rows(f, [row_symbol(y) for y in heights])
    return ExtensionGrid(f.grid, heights, values, kind="half-plane")


def strip_row_symbol(delta: float, y: float) -> MultiplierSymbol:
    """2 pi i xi (1 + coth(2 pi delta xi)) exp(-2 pi xi y), finite for 0 <= y < 2 delta

    Written so the xi < 0 branch never forms exp(4 pi delta |xi|); the
    xi = 0 value is the limit i/delta.
    """

    def evaluator(xi):
        a = TWO_PI * np.abs(xi)
        positive = 2.0 + 2.0 / np.expm1(2.0 * delta * a)
        positive = positive * np.exp(-a * y)
        negative = -2.0 * np.exp(-2.0 * delta * a + a * y) / -np.expm1(-2.0 * delta * a)
        body = np.where(xi > 0, positive, negative)
        return np.where(xi == 0, 1j / delta, 1j * TWO_PI * xi * body)

    return MultiplierSymbol(evaluator, "general", f"strip row delta={delta:g} y={y:g}")


def strip_extend_ilw(f: Field, delta: float, heights: Sequence[float]) -> ExtensionGrid:
    """Extension of F = d_x f + i L_delta d_x f into the strip 0 < y < 2 delta"""
    _require_real(f)
    if delta is None or not math.isfinite(delta) or delta <= 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    heights = np.asarray(heights, dtype=np.float64)
    _check_heights(heights)
    top = float(heights[-1])
    if top >= 2.0 * delta:
        raise ValueError(f"height {top:g} outside strip of analyticity (2*delta={2 * delta:g})")
    if top > GUARD_FRACTION * 2.0 * delta:
        raise ValueError(f"height {top:g} inside guard band ({GUARD_FRACTION * 2 * delta:g}, {2 * delta:g})")

    values = _extension_rows(f, [strip_row_symbol(delta, y) for y in heights])
    return ExtensionGrid(f.grid, heights, values, kind="strip", delta=delta)


def _row_x_derivative(E: ExtensionGrid, order: int) -> np.ndarray:
    spectra = forward_transform(E.grid, E.values)
    return inverse_transform(E.grid, derivative_values(E.grid, order) * spectra)


def _interior_weights(heights: np.ndarray, m: int):
    h1 = heights[m] - heights[m - 1]
    h2 = heights[m + 1] - heights[m]
    return h1, h2


def cauchy_riemann_residual(E: ExtensionGrid) -> float:
    """max over interior rows of |d_x F + i d_y F| / max|F|

    d_x is spectral, d_y the 3-point central difference on the (possibly
    nonuniform) height list.
    """
    if E.heights.size < 3:
        raise ValueError(f"cauchy_riemann_residual needs at least 3 heights, got {E.heights.size}")
    scale = float(np.max(np.abs(E.values)))
    if scale == 0.0:
        return 0.0
    fx = _row_x_derivative(E, 1)
    F = E.values
    worst = 0.0
    for m in range(1, E.heights.size - 1):
        h1, h2 = _interior_weights(E.heights, m)
        fy = (-h2 / (h1 * (h1 + h2)) * F[m - 1]
              + (h2 - h1) / (h1 * h2) * F[m]
              + h1 / (h2 * (h1 + h2)) * F[m + 1])
        worst = max(worst, float(np.max(np.abs(fx[m] + 1j * fy))))
    return worst / scale


def harmonic_residual(E: ExtensionGrid) -> float:
    """max over interior rows of |Laplacian of Re F| / max|F|"""
    if E.heights.size < 3:
        raise ValueError(f"harmonic_residual needs at least 3 heights, got {E.heights.size}")
    scale = float(np.max(np.abs(E.values)))
    if scale == 0.0:
        return 0.0
    U = E.values.real
    uxx = _row_x_derivative(E, 2).real
    worst = 0.0
    for m in range(1, E.heights.size - 1):
        h1, h2 = _interior_weights(E.heights, m)
        uyy = 2.0 * (U[m - 1] / (h1 * (h1 + h2)) - U[m] / (h1 * h2) + U[m + 1] / (h2 * (h1 + h2)))
        worst = max(worst, float(np.max(np.abs(uxx[m] + uyy))))
    return worst / scale


def partner_field(f: Field, partner: str, delta: Optional[float] = None) -> Field:
    if partner == "hilbert":
        return hilbert(f)
    if partner == "ilw_dx":
        if delta is None:
            raise ValueError("partner ilw_dx requires delta")
        return ilw_apply(f, delta, "L_dx")
    raise ValueError(f"partner must be one of {PARTNERS}, got {partner!r}")


def uc_probe(f: Field, interval: Tuple[float, float], partner: str = "hilbert",
             delta: Optional[float] = None, tol_zero: float = 1e-10,
             norm_floor: float = 1e-6) -> UCReport:
    """Measure f and partner(f) on an interval

    A violation candidate is a field of non-negligible norm for which both f
    and its partner are below tol_zero on the whole interval.
    """
    _require_real(f)
    a, b = float(interval[0]), float(interval[1])
    grid = f.grid
    if not a < b:
        raise ValueError(f"interval [{a}, {b}] is empty")
    inside = (grid.points >= a) & (grid.points <= b)
    count = int(np.count_nonzero(inside))
    if count < MIN_INTERVAL_POINTS:
        raise ValueError(f"unresolvable interval [{a}, {b}]: {count} grid points, need {MIN_INTERVAL_POINTS}")

    g = partner_field(f, partner, delta)
    abs_f = np.abs(f.samples[inside])
    abs_g = np.abs(g.samples[inside])
    f_norm = f.l2_norm()

    sup_f, sup_g = float(abs_f.max()), float(abs_g.max())
    verdict = VIOLATION if (sup_f < tol_zero and sup_g < tol_zero and f_norm > norm_floor) else CONSISTENT
    report = UCReport(
        interval=(a, b),
        partner=partner,
        delta=delta if partner == "ilw_dx" else None,
        sup_f=sup_f,
        inf_f=float(abs_f.min()),
        sup_partner=sup_g,
        inf_partner=float(abs_g.min()),
        f_norm=f_norm,
        verdict=verdict,
    )
    if f_norm <= norm_floor:
        report.notes.append(f"norm {f_norm:.3e} below floor {norm_floor:g}: trivial field")
    if verdict == VIOLATION:
        logger.warning(f"⚠️ [UCProbe] violation candidate on [{a:g}, {b:g}] with partner {partner}")
    else:
        logger.debug(f"🔍 [UCProbe] [{a:g}, {b:g}] {partner}: inf|partner|={report.inf_partner:.3e}")
    return report


def _difference_pair(spec: EquationSpec, w: Field) -> Tuple[Field, str, Optional[float]]:
    """The (f, partner) pair through which the model's difference equation sees w"""
    tag = spec.tag
    if tag in (ModelTag.BO, ModelTag.GBO):
        return derivative(w, 2), "hilbert", None
    if tag == ModelTag.BH:
        return w, "hilbert", None
    if tag == ModelTag.ILW:
        return derivative(w, 1), "ilw_dx", spec.delta
    if tag == ModelTag.GENERAL_LINEAR:
        return (derivative(w, spec.j) if spec.j > 0 else w), "hilbert", None
    raise ValueError(f"{spec.label()} is local: no nonlocal partner to probe")


def difference_probe(traj_a, traj_b, index: int, interval: Tuple[float, float],
                     tol_zero: float = 1e-10, norm_floor: float = 1e-6) -> UCReport:
    """uc_probe on the difference w = u_a - u_b of two runs at one snapshot"""
    if traj_a.spec != traj_b.spec:
        raise ValueError("trajectories must come from the same model")
    state_a, state_b = traj_a.states[index], traj_b.states[index]
    if state_a.u.grid != state_b.u.grid:
        raise ValueError("trajectories must share a grid")
    if not math.isclose(state_a.t, state_b.t, rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError(f"snapshot times differ: {state_a.t} vs {state_b.t}")

    w = Field(state_a.u.grid, state_a.u.samples - state_b.u.samples)
    f, partner, delta = _difference_pair(traj_a.spec, w)
    report = uc_probe(f, interval, partner, delta, tol_zero, norm_floor)
    report.notes.append(f"difference of two {traj_a.spec.label()} runs at t={state_a.t:g}")
    return report


def time_derivative_vanishing_probe(u_a: Field, u_b: Field, spec: EquationSpec, x0: float,
                                    radii: Sequence[float], t: float = 0.0) -> VanishingOrderReport:
    """Vanishing order about x0 of d_t(u_a - u_b) at time t, read off the equation"""
    if u_a.grid != u_b.grid:
        raise ValueError("fields must share a grid")
    dw = rhs(spec, SimState(u_a, t)).samples - rhs(spec, SimState(u_b, t)).samples
    report = vanishing_order_fit(Field(u_a.grid, dw), x0, radii)
    report.notes.append(f"d_t of the difference under {spec.label()} at t={t:g}")
    return report
