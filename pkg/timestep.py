"""
Time Integration
Integrating-factor RK4 for d_t u = Lambda u + N(u): the linear multiplier is
advanced exactly, classical RK4 handles the rest
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from diagnostics import DiagnosticsRecord, diagnostics
from models import (
    BlowupError,
    EquationSpec,
    ModelTag,
    SimState,
    linear_symbol_values,
    nonlinear_spectrum,
)
from spectral_core import TWO_PI, Field, TorusGrid, real_samples

logger = logging.getLogger(__name__)

SCHEMES = ("IFRK4",)
TAIL_WARNING_THRESHOLD = 1e-6
# Extent of the RK4 stability region along the imaginary axis
RK4_IMAGINARY_LIMIT = 2.8


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings"""
    dt: float
    t_final: float
    scheme: str = "IFRK4"
    snapshot_stride: int = 1
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not math.isfinite(self.dt) or self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not math.isfinite(self.t_final) or self.t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if isinstance(self.snapshot_stride, bool) or not isinstance(self.snapshot_stride, int) \
                or self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be a positive integer, got {self.snapshot_stride!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")

    def step_count(self) -> int:
        if self.t_final == 0:
            return 0
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))


@dataclass
class Trajectory:
    """Snapshots of one run with a diagnostics record per snapshot"""
    spec: EquationSpec
    states: List[SimState] = field(default_factory=list)
    records: List[DiagnosticsRecord] = field(default_factory=list)
    blowup: bool = False
    blowup_time: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> SimState:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)

    def append(self, state: SimState):
        self.states.append(state)
        self.records.append(diagnostics(state, self.spec))

    def warn(self, message: str):
        if message not in self.warnings:
            logger.warning(f"⚠️ [IFRK4] {message}")
            self.warnings.append(message)


class IFRK4Stepper:
    """Integrating-factor RK4 for one model on one grid

    Exponentials exp(Lambda dt) and exp(Lambda dt / 2) are cached per dt; a run
    uses at most two step sizes (the regular one and the shortened last step).
    """

    def __init__(self, spec: EquationSpec, grid: TorusGrid):
        self.spec = spec
        self.grid = grid
        self.symbol = linear_symbol_values(spec, grid)
        self._factors: Dict[float, tuple] = {}

    def _exponentials(self, dt: float):
        if dt not in self._factors:
            self._factors[dt] = (np.exp(self.symbol * dt), np.exp(self.symbol * (0.5 * dt)))
        return self._factors[dt]

    def _stage(self, u_hat: np.ndarray, t: float, dt: float) -> np.ndarray:
        out = dt * nonlinear_spectrum(self.spec, self.grid, u_hat, t)
        if not np.all(np.isfinite(out)):
            raise BlowupError(t, "non-finite intermediate stage")
        return out

    def advance(self, u_hat: np.ndarray, t: float, dt: float) -> np.ndarray:
        e, e2 = self._exponentials(dt)
        a = self._stage(u_hat, t, dt)
        b = self._stage(e2 * (u_hat + 0.5 * a), t + 0.5 * dt, dt)
        c = self._stage(e2 * u_hat + 0.5 * b, t + 0.5 * dt, dt)
        d = self._stage(e * u_hat + e2 * c, t + dt, dt)
        return e * u_hat + (e * a + 2.0 * e2 * (b + c) + d) / 6.0

    def step(self, state: SimState, dt: float) -> SimState:
        u_hat = self.advance(state.u.spectrum, state.t, dt)
        return SimState(Field(self.grid, real_samples(self.grid, u_hat)), state.t + dt)


def ifrk4_step(state: SimState, dt: float, spec: EquationSpec) -> SimState:
    """One integrating-factor RK4 step of size dt"""
    if not math.isfinite(dt) or dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return IFRK4Stepper(spec, state.u.grid).step(state, dt)


def phase_accuracy_bound(spec: EquationSpec, grid: TorusGrid, cfl_safety: float = 0.5) -> float:
    """Largest dt the heuristic accepts without a warning

    Constant-coefficient models: cfl_safety / max|Lambda|. The general linear
    model is stepped fully explicitly, so the bound uses the RK4 imaginary-axis
    limit against the spectral radius of its operator at t = 0.
    """
    if spec.tag != ModelTag.GENERAL_LINEAR:
        peak = float(np.max(np.abs(linear_symbol_values(spec, grid))))
        return math.inf if peak == 0 else cfl_safety / peak

    x = grid.points
    xi_max = TWO_PI * np.max(np.abs(grid.wavenumbers)) * 2.0 / 3.0
    radius = float(np.max(np.abs(spec.b(x, 0.0)))) * xi_max ** spec.j
    for m, a_m in enumerate(spec.a):
        radius += float(np.max(np.abs(np.broadcast_to(a_m(x, 0.0), x.shape)))) * xi_max ** m
    return math.inf if radius == 0 else cfl_safety * RK4_IMAGINARY_LIMIT / radius


def run(u0: Field, spec: EquationSpec, cfg: IntegratorConfig) -> Trajectory:
    """Advance u0 to cfg.t_final, recording every snapshot_stride-th step and the final state

    The last step is shortened to land exactly on t_final. Blowup stops the run
    and returns the snapshots recorded so far with the blowup flag set.
    """
    grid = u0.grid
    trajectory = Trajectory(spec)
    trajectory.append(SimState(u0, 0.0))

    bound = phase_accuracy_bound(spec, grid, cfg.cfl_safety)
    if cfg.dt > bound:
        trajectory.warn(f"dt={cfg.dt:g} exceeds the phase-accuracy bound {bound:.3g} for {spec.label()}")
    _check_tail(trajectory)

    nsteps = cfg.step_count()
    logger.info(f"🚀 [IFRK4] {spec.label()} n={grid.n} L={grid.length:g} dt={cfg.dt:g} "
                f"t_final={cfg.t_final:g} steps={nsteps}")

    stepper = IFRK4Stepper(spec, grid)
    state = trajectory.states[0]
    try:
        for step in range(1, nsteps + 1):
            if step == nsteps:
                h = cfg.t_final - state.t
                state = stepper.step(state, h)
                state = SimState(state.u, cfg.t_final)
            else:
                state = stepper.step(state, cfg.dt)
                # Times are rebuilt from the step count so strides stay uniform
                state = SimState(state.u, step * cfg.dt)
            if step % cfg.snapshot_stride == 0 or step == nsteps:
                trajectory.append(state)
                _check_tail(trajectory)
    except BlowupError as e:
        logger.error(f"💥 [IFRK4] {spec.label()}: {e}")
        trajectory.blowup = True
        trajectory.blowup_time = e.t
        return trajectory

    logger.info(f"✅ [IFRK4] {spec.label()} reached t={state.t:g} with {len(trajectory)} snapshots")
    return trajectory


def _check_tail(trajectory: Trajectory):
    record = trajectory.records[-1]
    if any(w.startswith("spectral tail") for w in trajectory.warnings):
        return
    if record.spectral_tail_fraction > TAIL_WARNING_THRESHOLD:
        trajectory.warn(f"spectral tail fraction {record.spectral_tail_fraction:.2e} above "
                        f"{TAIL_WARNING_THRESHOLD:.0e}: solution is under-resolved")
