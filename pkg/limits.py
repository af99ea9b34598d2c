"""
Limit Studies
Parameter sweeps for ILW -> BO as delta grows (deep water) and rescaled
ILW -> KdV as delta shrinks (shallow water), plus their symbol-level checks
"""

import asyncio
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from scipy.stats import linregress

from diagnostics import relative_l2_error
from models import EquationSpec, linear_symbol
from spectral_core import TWO_PI, Field, coth_minus_sign
from timestep import IntegratorConfig, Trajectory, run

load_dotenv()

logger = logging.getLogger(__name__)

MAX_WORKERS = int(os.getenv("BOLAB_MAX_WORKERS", 4))

DEEP_PAIR = "ilw->bo"
SHALLOW_PAIR = "ilw->kdv"


@dataclass
class LimitStudyReport:
    """Per-delta relative L2 errors against the limiting model"""
    pair: str
    deltas: List[float]
    errors: List[float]
    T: float
    monotone: Optional[bool] = None
    fitted_rate: Optional[float] = None
    warnings: List[str] = field(default_factory=list)
    blowup_deltas: List[float] = field(default_factory=list)
    reference_blowup: bool = False
    note: str = ""

    def to_dict(self) -> Dict:
        out = asdict(self)
        out["errors"] = [None if math.isnan(e) else e for e in self.errors]
        return out


def _check_deltas(deltas: Sequence[float], increasing: bool) -> List[float]:
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("delta list must not be empty")
    if any(not math.isfinite(d) or d <= 0 for d in deltas):
        raise ValueError(f"every delta must be positive, got {deltas}")
    steps = np.diff(deltas)
    if increasing and np.any(steps <= 0):
        raise ValueError(f"deltas must increase strictly for the deep-water study, got {deltas}")
    if not increasing and np.any(steps >= 0):
        raise ValueError(f"deltas must decrease strictly for the shallow-water study, got {deltas}")
    return deltas


def _summarize(report: LimitStudyReport):
    """Fill in the monotonicity verdict and the log-log rate"""
    errors = report.errors
    if report.reference_blowup or report.blowup_deltas or len(errors) < 2:
        return
    if all(e == 0.0 for e in errors):
        return
    report.monotone = all(later < earlier for earlier, later in zip(errors, errors[1:]))
    if all(e > 0.0 for e in errors):
        fit = linregress(np.log(report.deltas), np.log(errors))
        report.fitted_rate = float(fit.slope)


def _collect_warnings(report: LimitStudyReport, label: str, trajectory: Trajectory):
    for message in trajectory.warnings:
        report.warnings.append(f"{label}: {message}")


async def _run_all(jobs):
    """Run (u0, spec, cfg) jobs concurrently on a thread pool, results in job order"""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        tasks = [loop.run_in_executor(executor, run, u0, spec, cfg) for u0, spec, cfg in jobs]
        return await asyncio.gather(*tasks)


async def deep_water_study_async(u0: Field, deltas: Sequence[float], T: float,
                                 cfg: IntegratorConfig) -> LimitStudyReport:
    deltas = _check_deltas(deltas, increasing=True)
    base = replace(cfg, t_final=T)
    steps = max(1, base.step_count())
    base = replace(base, snapshot_stride=steps)
    logger.info(f"🚀 [Limits] deep water: BO vs ILW for delta in {deltas}, T={T:g}")

    jobs = [(u0, EquationSpec.bo(), base)]
    jobs += [(u0, EquationSpec.ilw(d), base) for d in deltas]
    reference, *runs = await _run_all(jobs)

    report = LimitStudyReport(pair=DEEP_PAIR, deltas=deltas, errors=[], T=T,
                              note="same initial data and integrator settings for every run")
    _collect_warnings(report, "bo", reference)
    report.reference_blowup = reference.blowup
    for delta, trajectory in zip(deltas, runs):
        _collect_warnings(report, f"ilw(delta={delta:g})", trajectory)
        if trajectory.blowup or reference.blowup:
            if trajectory.blowup:
                report.blowup_deltas.append(delta)
            report.errors.append(math.nan)
            continue
        report.errors.append(relative_l2_error(trajectory.final.u, reference.final.u))

    _summarize(report)
    logger.info(f"📊 [Limits] deep water errors {report.errors}, monotone={report.monotone}")
    return report


def deep_water_study(u0: Field, deltas: Sequence[float], T: float,
                     cfg: IntegratorConfig) -> LimitStudyReport:
    """ILW(delta) against BO from the same data; errors expected to fall as delta grows"""
    return asyncio.run(deep_water_study_async(u0, deltas, T, cfg))


def shallow_water_amplitude(delta: float) -> float:
    """ILW amplitude s with u_ilw(x, 3t/delta) = s * v_kdv(x, t) for v_t = -v_xxx - (v^2)_x"""
    return 2.0 * delta / 3.0


async def shallow_water_study_async(u0: Field, deltas: Sequence[float], T: float,
                                    cfg: IntegratorConfig) -> LimitStudyReport:
    deltas = _check_deltas(deltas, increasing=False)
    reference_cfg = replace(cfg, t_final=T)
    steps = max(1, reference_cfg.step_count())
    reference_cfg = replace(reference_cfg, snapshot_stride=steps)
    logger.info(f"🚀 [Limits] shallow water: KdV vs rescaled ILW for delta in {deltas}, T={T:g}")

    jobs = [(u0, EquationSpec.kdv(2), reference_cfg)]
    for delta in deltas:
        stretch = 3.0 / delta
        # ILW time runs 3/delta faster; the step is stretched so both runs take the same step count
        ilw_cfg = replace(reference_cfg, dt=cfg.dt * stretch, t_final=T * stretch)
        scaled = Field(u0.grid, shallow_water_amplitude(delta) * u0.samples)
        jobs.append((scaled, EquationSpec.ilw(delta), ilw_cfg))
    reference, *runs = await _run_all(jobs)

    report = LimitStudyReport(
        pair=SHALLOW_PAIR, deltas=deltas, errors=[], T=T,
        note="ILW datum (2 delta / 3) u0 run to (3 / delta) T, compared in the ILW amplitude scale")
    _collect_warnings(report, "kdv", reference)
    report.reference_blowup = reference.blowup
    for delta, trajectory in zip(deltas, runs):
        _collect_warnings(report, f"ilw(delta={delta:g})", trajectory)
        if trajectory.blowup or reference.blowup:
            if trajectory.blowup:
                report.blowup_deltas.append(delta)
            report.errors.append(math.nan)
            continue
        target = Field(u0.grid, shallow_water_amplitude(delta) * reference.final.u.samples)
        report.errors.append(relative_l2_error(trajectory.final.u, target))

    _summarize(report)
    logger.info(f"📊 [Limits] shallow water errors {report.errors}, monotone={report.monotone}")
    return report


def shallow_water_study(u0: Field, deltas: Sequence[float], T: float,
                        cfg: IntegratorConfig) -> LimitStudyReport:
    """Rescaled ILW(delta) against KdV from u0; errors expected to fall as delta shrinks"""
    return asyncio.run(shallow_water_study_async(u0, deltas, T, cfg))


def deep_water_symbol_defect(xi, delta: float) -> np.ndarray:
    """|sigma(d_x^2 L_delta) - sigma(H d_x^2)| = 4 pi^2 xi^2 |coth(2 pi delta xi) - sgn(xi)|"""
    xi = np.asarray(xi, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.abs(coth_minus_sign(TWO_PI * delta * xi))
        out = (TWO_PI * xi) ** 2 * gap
    return np.where(xi == 0, 0.0, out)


def shallow_water_symbol_defect(xi, delta: float) -> np.ndarray:
    """|(3/delta) Lambda_ILW(xi) - Lambda_KdV(xi)|, O(delta^2) at fixed xi"""
    ilw = linear_symbol(EquationSpec.ilw(delta))(xi)
    kdv = linear_symbol(EquationSpec.kdv())(xi)
    return np.abs(3.0 / delta * ilw - kdv)


def shallow_water_symbol_order(xi: float, deltas: Sequence[float]) -> float:
    """Log-log slope of the shallow-water symbol defect against delta (about 2)"""
    defects = [float(shallow_water_symbol_defect(xi, d)) for d in deltas]
    if len(defects) < 2 or any(d <= 0 for d in defects):
        raise ValueError("need at least two deltas with a nonzero defect")
    return float(linregress(np.log(deltas), np.log(defects)).slope)
