"""
Diagnostics
Conserved quantities, norms, the PDE-residual oracle, windowed masses and
power-law vanishing-order fits
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import linregress

from models import EquationSpec, ModelTag, SimState, rhs
from spectral_core import TWO_PI, Field

logger = logging.getLogger(__name__)

# Snapshot spacings closer than this (relative) count as uniform
UNIFORM_SPACING_RTOL = 1e-9
MIN_RESOLVED_POINTS = 4


@dataclass
class DiagnosticsRecord:
    """Invariants and norms of one snapshot"""
    t: float
    mass: float
    l2: float
    hamiltonian: Optional[float]
    sobolev_half: float
    spectral_tail_fraction: float
    sup_norm: float

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {
            "t": self.t,
            "mass": self.mass,
            "l2": self.l2,
            "hamiltonian": self.hamiltonian,
            "hs_half": self.sobolev_half,
            "tail_fraction": self.spectral_tail_fraction,
            "sup_norm": self.sup_norm,
        }


@dataclass
class VanishingOrderReport:
    """Fit of log M(R) against log R, M(R) = integral of |g|^2 over |x - x0| <= R"""
    x0: float
    radii: List[float]
    masses: List[float]
    slope: float
    intercept: Optional[float] = None
    residual: Optional[float] = None
    infinite_order: bool = False
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        out = asdict(self)
        if math.isinf(self.slope):
            out["slope"] = "inf"
        return out


def hamiltonian_coefficient(spec: EquationSpec) -> Optional[float]:
    """Cubic coefficient of the Hamiltonian, None when the model has none"""
    if not spec.has_hamiltonian:
        return None
    return 1.0 / 6.0 if spec.tag == ModelTag.BO else 1.0 / 3.0


def diagnostics(state: SimState, spec: EquationSpec) -> DiagnosticsRecord:
    """Mass, L2, Hamiltonian (BO, GBO k=2), H^{1/2}-type norm, tail fraction, sup norm"""
    u = state.u
    grid = u.grid
    h = grid.spacing
    power = np.abs(u.spectrum) ** 2 / grid.length
    xi = np.abs(grid.wavenumbers)

    total = float(np.sum(power))
    tail = float(np.sum(power[np.abs(grid.mode_numbers) >= grid.n // 4]))
    tail_fraction = tail / total if total > 0 else 0.0

    hamiltonian = None
    cubic = hamiltonian_coefficient(spec)
    if cubic is not None:
        # u * H d_x u pairs to the multiplier 2 pi |xi| by Parseval
        quadratic = 0.5 * float(np.sum(TWO_PI * xi * power))
        hamiltonian = quadratic - cubic * float(np.sum(u.samples ** 3) * h)

    return DiagnosticsRecord(
        t=float(state.t),
        mass=float(np.sum(u.samples) * h),
        l2=u.l2_norm(),
        hamiltonian=hamiltonian,
        sobolev_half=math.sqrt(float(np.sum((1.0 + xi) * power))),
        spectral_tail_fraction=min(max(tail_fraction, 0.0), 1.0),
        sup_norm=u.sup_norm(),
    )


def relative_l2_error(u: Field, reference: Field) -> float:
    """||u - ref|| / ||ref||, or the absolute error when ref is zero"""
    diff = Field(u.grid, u.samples - reference.samples)
    norm = reference.l2_norm()
    return diff.l2_norm() / norm if norm > 0 else diff.l2_norm()


def _uniform_prefix(times: np.ndarray) -> int:
    """Length of the uniformly spaced prefix; only the final snapshot may break it"""
    steps = np.diff(times)
    base = steps[0]
    if base <= 0:
        raise ValueError("snapshot times must increase strictly")
    for i, step in enumerate(steps):
        if abs(step - base) > UNIFORM_SPACING_RTOL * base:
            if i == len(steps) - 1:
                # shortened last step of a run
                return i + 1
            raise ValueError("non-uniform snapshot spacing")
    return len(times)


def residual(traj, spec: Optional[EquationSpec] = None) -> float:
    """max over interior snapshots of ||d_t u - rhs(u)|| / ||u||

    d_t u comes from 4th-order central differences in time (2nd order when
    fewer than 5 uniformly spaced snapshots exist).
    """
    spec = spec or traj.spec
    states: Sequence[SimState] = traj.states
    if len(states) < 3:
        raise ValueError(f"residual needs at least 3 snapshots, got {len(states)}")

    times = np.array([s.t for s in states])
    count = _uniform_prefix(times)
    if count < 3:
        raise ValueError(f"residual needs at least 3 uniformly spaced snapshots, got {count}")
    step = times[1] - times[0]
    samples = [s.u.samples for s in states[:count]]

    if count >= 5:
        interior = range(2, count - 2)

        def time_derivative(i):
            return (-samples[i + 2] + 8.0 * samples[i + 1] - 8.0 * samples[i - 1] + samples[i - 2]) / (12.0 * step)
    else:
        interior = range(1, count - 1)

        def time_derivative(i):
            return (samples[i + 1] - samples[i - 1]) / (2.0 * step)

    worst = 0.0
    for i in interior:
        state = states[i]
        defect = Field(state.u.grid, time_derivative(i) - rhs(spec, state).samples)
        norm = state.u.l2_norm()
        worst = max(worst, defect.l2_norm() / norm if norm > 0 else defect.l2_norm())
    logger.debug(f"🔍 [Residual] {spec.label()} over {len(interior)} interior snapshots: {worst:.3e}")
    return worst


def windowed_mass(u: Field, a: float, b: float) -> float:
    """Sum of u(x_j)^2 h over grid points x_j in [a, b]"""
    grid = u.grid
    half = 0.5 * grid.length
    if not (-half <= a < b < half):
        raise ValueError(f"window [{a}, {b}] must satisfy -L/2 <= a < b < L/2 (L={grid.length})")
    inside = (grid.points >= a) & (grid.points <= b)
    if not inside.any():
        raise ValueError(f"window [{a}, {b}] contains no grid points")
    return float(np.sum(np.abs(u.samples[inside]) ** 2) * grid.spacing)


def periodic_distance(points: np.ndarray, x0: float, length: float) -> np.ndarray:
    return np.abs((points - x0 + 0.5 * length) % length - 0.5 * length)


def vanishing_order_fit(g: Field, x0: float, radii: Sequence[float]) -> VanishingOrderReport:
    """Least-squares slope of log M(R) against log R about x0

    Any exactly zero mass means no finite power law fits; the slope is then
    reported as +inf with infinite_order set.
    """
    grid = g.grid
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 4:
        raise ValueError(f"vanishing_order_fit needs at least 4 radii, got {len(radii)}")
    if len(set(radii)) != len(radii):
        raise ValueError("radii must be distinct")
    floor = MIN_RESOLVED_POINTS * grid.spacing
    if radii[-1] < floor:
        raise ValueError(f"radius {radii[-1]:g} is not resolved (needs R >= {floor:g})")
    if radii[0] >= 0.5 * grid.length:
        raise ValueError(f"radius {radii[0]:g} must be below L/2 = {0.5 * grid.length:g}")

    distance = periodic_distance(grid.points, x0, grid.length)
    weights = np.abs(g.samples) ** 2
    masses = [float(np.sum(weights[distance <= r]) * grid.spacing) for r in radii]

    if any(m == 0.0 for m in masses):
        logger.info(f"🔍 [VanishingOrder] exact zero mass about x0={x0:g}: numerically infinite order")
        return VanishingOrderReport(x0=x0, radii=radii, masses=masses, slope=math.inf,
                                    infinite_order=True, notes=["numerically infinite order"])

    log_r = np.log(radii)
    log_m = np.log(masses)
    fit = linregress(log_r, log_m)
    misfit = log_m - (fit.intercept + fit.slope * log_r)
    return VanishingOrderReport(
        x0=x0,
        radii=radii,
        masses=masses,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residual=float(np.sqrt(np.mean(misfit ** 2))),
    )
