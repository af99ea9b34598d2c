"""
Evolution Models
Right-hand sides d_t u = RHS for BO, generalized BO, Burgers-Hilbert, ILW,
(generalized) KdV and the variable-coefficient linear model, plus the
constant-coefficient linear symbol each model hands to the integrator
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from spectral_core import (
    TWO_PI,
    Field,
    MultiplierSymbol,
    TorusGrid,
    derivative_values,
    hilbert_values,
    product_spectrum,
    real_samples,
    symbol_values,
    zcothz_minus_one,
)

logger = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e8
MAX_COEFFICIENT_ORDER = 4

Coefficient = Callable[[np.ndarray, float], np.ndarray]


class ModelTag(str, Enum):
    BO = "bo"
    GBO = "gbo"
    BH = "bh"
    ILW = "ilw"
    KDV = "kdv"
    GENERAL_LINEAR = "general_linear"


class BlowupError(RuntimeError):
    """Raised when the solution stops being finite or exceeds the blowup threshold"""

    def __init__(self, t: float, reason: str = "non-finite values"):
        super().__init__(f"blowup at t={t!r}: {reason}")
        self.t = t


class DegenerateCoefficientError(ValueError):
    """Raised when b(x, t) vanishes at a sampled point of the general linear model"""

    def __init__(self, x: float, t: float):
        super().__init__(f"degenerate coefficient: b vanishes at x={x!r}, t={t!r}")
        self.x = x
        self.t = t


@dataclass(frozen=True)
class EquationSpec:
    """Which evolution model to run, with its parameters"""
    tag: ModelTag
    k: Optional[int] = None
    delta: Optional[float] = None
    j: int = 0
    a: Tuple[Coefficient, ...] = ()
    b: Optional[Coefficient] = None

    def __post_init__(self):
        object.__setattr__(self, "tag", ModelTag(self.tag))
        if self.tag == ModelTag.KDV and self.k is None:
            object.__setattr__(self, "k", 2)
        if self.tag in (ModelTag.GBO, ModelTag.KDV):
            if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 2:
                raise ValueError(f"{self.tag.value} requires integer k >= 2, got {self.k!r}")
        if self.tag == ModelTag.ILW:
            if self.delta is None or not math.isfinite(self.delta) or self.delta <= 0:
                raise ValueError(f"ilw requires delta > 0, got {self.delta!r}")
        if self.tag == ModelTag.GENERAL_LINEAR:
            if self.b is None:
                raise ValueError("general_linear requires a coefficient b")
            if not 0 <= self.j <= MAX_COEFFICIENT_ORDER:
                raise ValueError(f"general_linear requires 0 <= j <= {MAX_COEFFICIENT_ORDER}, got {self.j}")
            if len(self.a) > MAX_COEFFICIENT_ORDER + 1:
                raise ValueError(f"at most {MAX_COEFFICIENT_ORDER + 1} coefficients a_m are supported")
            object.__setattr__(self, "a", tuple(self.a))

    @classmethod
    def bo(cls) -> "EquationSpec":
        return cls(ModelTag.BO)

    @classmethod
    def gbo(cls, k: int) -> "EquationSpec":
        return cls(ModelTag.GBO, k=k)

    @classmethod
    def bh(cls) -> "EquationSpec":
        return cls(ModelTag.BH)

    @classmethod
    def ilw(cls, delta: float) -> "EquationSpec":
        return cls(ModelTag.ILW, delta=delta)

    @classmethod
    def kdv(cls, k: int = 2) -> "EquationSpec":
        return cls(ModelTag.KDV, k=k)

    @classmethod
    def general_linear(cls, j: int, a: Tuple[Coefficient, ...], b: Coefficient) -> "EquationSpec":
        return cls(ModelTag.GENERAL_LINEAR, j=j, a=tuple(a), b=b)

    @property
    def has_hamiltonian(self) -> bool:
        return self.tag == ModelTag.BO or (self.tag == ModelTag.GBO and self.k == 2)

    def label(self) -> str:
        if self.tag in (ModelTag.GBO, ModelTag.KDV):
            return f"{self.tag.value}(k={self.k})"
        if self.tag == ModelTag.ILW:
            return f"ilw(delta={self.delta})"
        if self.tag == ModelTag.GENERAL_LINEAR:
            return f"general_linear(j={self.j})"
        return self.tag.value


def check_samples(samples: np.ndarray, t: float):
    if not np.all(np.isfinite(samples)):
        raise BlowupError(t)
    sup = float(np.max(np.abs(samples)))
    if sup >= BLOWUP_THRESHOLD:
        raise BlowupError(t, f"sup norm {sup:.3e} above {BLOWUP_THRESHOLD:.0e}")


@dataclass(frozen=True)
class SimState:
    u: Field
    t: float

    def __post_init__(self):
        if not self.u.is_real:
            raise ValueError("simulation state must be real-valued")
        check_samples(self.u.samples, self.t)


def linear_symbol(spec: EquationSpec) -> MultiplierSymbol:
    """Constant-coefficient linear part Lambda(xi); purely imaginary and odd"""
    tag = spec.tag
    if tag in (ModelTag.BO, ModelTag.GBO):
        return MultiplierSymbol(lambda xi: 1j * TWO_PI ** 2 * xi ** 2 * np.sign(xi),
                                "odd-imaginary", "H d_x^2")
    if tag == ModelTag.BH:
        return MultiplierSymbol(lambda xi: -1j * np.sign(xi), "odd-imaginary", "H")
    if tag == ModelTag.ILW:
        delta = spec.delta
        # 4 pi^2 xi^2 i coth(2 pi delta xi) - 2 pi i xi / delta = i (2 pi xi / delta)(z coth z - 1)
        return MultiplierSymbol(
            lambda xi: 1j * (TWO_PI * xi / delta) * zcothz_minus_one(TWO_PI * delta * xi),
            "odd-imaginary", f"L_delta d_x^2 - d_x/delta [{delta}]")
    if tag == ModelTag.KDV:
        return MultiplierSymbol(lambda xi: -(1j * TWO_PI * xi) ** 3, "odd-imaginary", "-d_x^3")
    raise ValueError("no constant symbol: general_linear has variable coefficients")


@lru_cache(maxsize=64)
def linear_symbol_values(spec: EquationSpec, grid: TorusGrid) -> np.ndarray:
    """Lambda on the grid; identically zero for the general linear model"""
    if spec.tag == ModelTag.GENERAL_LINEAR:
        values = np.zeros(grid.n, dtype=np.complex128)
    else:
        values = symbol_values(grid, linear_symbol(spec))
    values.flags.writeable = False
    return values


def _coefficient_samples(coefficient: Coefficient, x: np.ndarray, t: float) -> np.ndarray:
    return np.broadcast_to(np.asarray(coefficient(x, t), dtype=np.float64), x.shape)


def nonlinear_spectrum(spec: EquationSpec, grid: TorusGrid, u_hat: np.ndarray, t: float) -> np.ndarray:
    """Everything in the right-hand side except Lambda * u_hat, dealiased"""
    v_hat = u_hat * grid.dealias_mask
    u = real_samples(grid, v_hat)
    tag = spec.tag

    if tag in (ModelTag.BO, ModelTag.BH, ModelTag.ILW):
        ux = real_samples(grid, derivative_values(grid, 1) * v_hat)
        return -product_spectrum(grid, u * ux)

    if tag in (ModelTag.GBO, ModelTag.KDV):
        return -derivative_values(grid, 1) * product_spectrum(grid, u ** spec.k)

    x = grid.points
    b = _coefficient_samples(spec.b, x, t)
    bad = ~np.isfinite(b) | (b == 0)
    if bad.any():
        raise DegenerateCoefficientError(float(x[np.argmax(bad)]), t)
    hilbert_dj = real_samples(grid, hilbert_values(grid) * derivative_values(grid, spec.j) * v_hat)
    total = b * hilbert_dj
    for m, a_m in enumerate(spec.a):
        coefficient = _coefficient_samples(a_m, x, t)
        if not np.all(np.isfinite(coefficient)):
            raise ValueError(f"coefficient a{m} is not finite at t={t!r}")
        if m == 0:
            total = total - coefficient * u
        else:
            total = total - coefficient * real_samples(grid, derivative_values(grid, m) * v_hat)
    return product_spectrum(grid, total)


def rhs_spectrum(spec: EquationSpec, grid: TorusGrid, u_hat: np.ndarray, t: float) -> np.ndarray:
    return linear_symbol_values(spec, grid) * u_hat + nonlinear_spectrum(spec, grid, u_hat, t)


def rhs(spec: EquationSpec, state: SimState) -> Field:
    """d_t u for the model at the given state

    BO -> H u_xx - u u_x; GBO -> H u_xx - (u^k)_x; BH -> H u - u u_x;
    ILW -> L_delta u_xx - u_x / delta - u u_x; KDV -> -u_xxx - (u^k)_x;
    GENERAL_LINEAR -> b H d^j w - sum a_m d^m w.
    """
    grid = state.u.grid
    check_samples(state.u.samples, state.t)
    out = rhs_spectrum(spec, grid, state.u.spectrum, state.t)
    return Field(grid, real_samples(grid, out))


def bo_periodic_soliton_speed(c: float, length: float) -> float:
    """Exact speed kappa*coth(kappa/c) of the torus BO traveling wave (-> c as L -> inf)"""
    if c <= 0:
        raise ValueError(f"soliton speed parameter must be positive, got {c}")
    kappa = TWO_PI / length
    return kappa / math.tanh(kappa / c)


def bo_periodic_soliton(grid: TorusGrid, c: float, x0: float = 0.0, t: float = 0.0) -> Field:
    """Sum over all periodic images of the line soliton 4c / (1 + c^2 x^2)

    Closed form 2 kappa sinh(g) / (cosh(g) - cos(kappa (x - x0 - s t))) with
    kappa = 2 pi / L, g = kappa / c; it solves BO on the torus exactly with
    speed s = bo_periodic_soliton_speed(c, L).
    """
    kappa = TWO_PI / grid.length
    g = kappa / c
    s = bo_periodic_soliton_speed(c, grid.length)
    theta = kappa * (grid.points - x0 - s * t)
    # sinh(g) / (cosh(g) - cos(theta)) written with expm1 to keep precision for small g
    e = math.expm1(g)
    sinh_g = 0.5 * e * (1.0 + math.exp(-g))
    cosh_minus_one = 0.5 * e * e / (1.0 + e)
    denominator = cosh_minus_one + 2.0 * np.sin(0.5 * theta) ** 2
    return Field(grid, 2.0 * kappa * sinh_g / denominator)


def bo_periodic_soliton_dt(grid: TorusGrid, c: float, x0: float = 0.0, t: float = 0.0) -> Field:
    """Analytic time derivative of bo_periodic_soliton"""
    kappa = TWO_PI / grid.length
    g = kappa / c
    s = bo_periodic_soliton_speed(c, grid.length)
    theta = kappa * (grid.points - x0 - s * t)
    e = math.expm1(g)
    sinh_g = 0.5 * e * (1.0 + math.exp(-g))
    cosh_minus_one = 0.5 * e * e / (1.0 + e)
    denominator = cosh_minus_one + 2.0 * np.sin(0.5 * theta) ** 2
    # d/dt of 2 kappa sinh g / D with dD/dtheta = sin(theta), dtheta/dt = -kappa s
    return Field(grid, 2.0 * kappa * sinh_g * kappa * s * np.sin(theta) / denominator ** 2)


def line_soliton(x: np.ndarray, c: float, x0: float = 0.0, t: float = 0.0) -> np.ndarray:
    return 4.0 * c / (1.0 + c ** 2 * (x - x0 - c * t) ** 2)
