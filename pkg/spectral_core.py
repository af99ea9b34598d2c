"""
Spectral Core
Torus grids, scaled discrete Fourier transforms, Fourier multipliers, and the
two nonlocal operators of the lab: the Hilbert transform and the ILW operator L_delta
"""

import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Optional, Union

import numpy as np
from dotenv import load_dotenv
from scipy import fft as sp_fft

load_dotenv()

logger = logging.getLogger(__name__)

FFT_WORKERS = int(os.getenv("BOLAB_FFT_WORKERS", 1))

MIN_POINTS = 8
MAX_DERIVATIVE_ORDER = 4
PARITIES = ("even-real", "odd-imaginary", "general")
ILW_MODES = ("L", "L_dx", "L_dxx")

TWO_PI = 2.0 * math.pi

# Largest imaginary residue, relative to the sup norm, a real-preserving symbol may leave
REALNESS_RTOL = 1e-12

# Below this |z| the series of z*coth(z) - 1 is used (error < 1e-17)
_SERIES_CUTOFF = 0.1


class SingularSymbolError(ValueError):
    """Raised when a multiplier is not finite at some grid wavenumber"""

    def __init__(self, xi: float, name: str = "symbol"):
        super().__init__(f"singular symbol '{name}' at xi={xi!r}")
        self.xi = xi


def _validate_grid(n, length):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise ValueError(f"n must be an integer, got {n!r}")
    if n % 2 != 0:
        raise ValueError(f"n must be even, got {n}")
    if n < MIN_POINTS:
        raise ValueError(f"n must be at least {MIN_POINTS}, got {n}")
    if not math.isfinite(length) or length <= 0:
        raise ValueError(f"length must be positive, got {length}")


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [-L/2, L/2) with its dual wavenumber set

    Arrays are stored in FFT order (k = 0, 1, ..., n/2-1, -n/2, ..., -1).
    """
    n: int
    length: float

    def __post_init__(self):
        _validate_grid(self.n, self.length)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    @cached_property
    def points(self) -> np.ndarray:
        x = -0.5 * self.length + np.arange(self.n) * self.spacing
        x.flags.writeable = False
        return x

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)
        k.flags.writeable = False
        return k

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        xi = self.mode_numbers / self.length
        xi.flags.writeable = False
        return xi

    @cached_property
    def phase(self) -> np.ndarray:
        # (-1)^k shifts the transform origin from x_0 = -L/2 to x = 0
        p = np.where(self.mode_numbers % 2 == 0, 1.0, -1.0)
        p.flags.writeable = False
        return p

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.abs(self.mode_numbers) <= self.n / 3.0
        mask.flags.writeable = False
        return mask

    def sorted_wavenumbers(self) -> np.ndarray:
        return np.sort(self.wavenumbers)


def make_grid(n: int, length: float) -> TorusGrid:
    """Build a TorusGrid after checking n (even, >= 8) and length (> 0)"""
    _validate_grid(n, length)
    return TorusGrid(n=n, length=length)


def forward_transform(grid: TorusGrid, samples: np.ndarray) -> np.ndarray:
    """Coefficients approximating the integral of u(x) exp(-2 pi i xi x) over the torus"""
    return grid.spacing * grid.phase * sp_fft.fft(samples, workers=FFT_WORKERS)


def inverse_transform(grid: TorusGrid, spectrum: np.ndarray) -> np.ndarray:
    return sp_fft.ifft(grid.phase * spectrum, workers=FFT_WORKERS) / grid.spacing


@dataclass(frozen=True, eq=False)
class Field:
    """Grid function with a lazily computed spectrum

    Samples are real for physical fields; complex samples are used for
    analytic signals and extension rows.
    """
    grid: TorusGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, copy=True)
        if samples.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {samples.shape}")
        if np.iscomplexobj(samples):
            samples = samples.astype(np.complex128)
        else:
            samples = samples.astype(np.float64)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(func(grid.points), (grid.n,)))

    @classmethod
    def from_spectrum(cls, grid: TorusGrid, spectrum: np.ndarray, real: bool = True) -> "Field":
        samples = inverse_transform(grid, spectrum)
        return cls(grid, samples.real if real else samples)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)

    @cached_property
    def spectrum(self) -> np.ndarray:
        s = forward_transform(self.grid, self.samples)
        s.flags.writeable = False
        return s

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.spacing))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def mean(self) -> Union[float, complex]:
        return self.samples.mean()


@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier multiplier xi -> sigma(xi), vectorized over numpy arrays"""
    evaluator: Callable[[np.ndarray], np.ndarray]
    parity: str = "general"
    name: str = "symbol"

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}, got {self.parity!r}")

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            values = np.asarray(self.evaluator(xi), dtype=np.complex128)
        return np.broadcast_to(values, xi.shape).copy()

    def preserves_realness(self) -> bool:
        return self.parity in ("even-real", "odd-imaginary")


def symbol_values(grid: TorusGrid, symbol: MultiplierSymbol) -> np.ndarray:
    """Symbol sampled at every grid wavenumber (FFT order)

    The Nyquist coefficient stands for both +n/(2L) and -n/(2L), so the symbol
    is applied there as the average of its two values.
    """
    xi = grid.wavenumbers
    values = symbol(xi)
    bad = ~np.isfinite(values)
    if bad.any():
        raise SingularSymbolError(float(xi[np.argmax(bad)]), symbol.name)
    mirror_xi = -xi[grid.nyquist_index]
    mirror = symbol(np.array([mirror_xi]))[0]
    if not np.isfinite(mirror):
        raise SingularSymbolError(float(mirror_xi), symbol.name)
    values[grid.nyquist_index] = 0.5 * (values[grid.nyquist_index] + mirror)
    return values


def apply_multiplier(u: Field, m: MultiplierSymbol) -> Field:
    """Transform, multiply by the symbol, invert"""
    if not np.all(np.isfinite(u.samples)):
        raise ValueError("field has non-finite samples")
    out = symbol_values(u.grid, m) * u.spectrum
    if not (u.is_real and m.preserves_realness()):
        return Field.from_spectrum(u.grid, out, real=False)
    samples = inverse_transform(u.grid, out)
    residue = float(np.max(np.abs(samples.imag)))
    scale = max(u.sup_norm(), float(np.max(np.abs(samples.real))))
    if residue > REALNESS_RTOL * scale:
        raise ValueError(
            f"symbol '{m.name}' tagged {m.parity} left an imaginary residue {residue:.3e} "
            f"(sup norm {scale:.3e})"
        )
    return Field(u.grid, samples.real)


def coth(z) -> np.ndarray:
    """coth evaluated without overflow; nan at z = 0"""
    z = np.asarray(z, dtype=np.float64)
    a = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.sign(z) * (1.0 + 2.0 / np.expm1(2.0 * a))
    return np.where(z == 0, np.nan, out)


def coth_minus_sign(z) -> np.ndarray:
    """coth(z) - sgn(z) = sgn(z) * 2 / (exp(2|z|) - 1), accurate for large |z|"""
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.sign(z) * 2.0 / np.expm1(2.0 * np.abs(z))
    return np.where(z == 0, np.nan, out)


def zcothz_minus_one(z) -> np.ndarray:
    """z*coth(z) - 1, exactly 0 at z = 0 and free of cancellation near it"""
    z = np.asarray(z, dtype=np.float64)
    z2 = z * z
    series = z2 * (1.0 / 3.0 + z2 * (-1.0 / 45.0 + z2 * (2.0 / 945.0 + z2 * (-1.0 / 4725.0 + z2 * 2.0 / 93555.0))))
    a = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = a * (1.0 + 2.0 / np.expm1(2.0 * a)) - 1.0
    return np.where(a < _SERIES_CUTOFF, series, direct)


def hilbert_symbol() -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: -1j * np.sign(xi), "odd-imaginary", "hilbert")


def derivative_symbol(order: int) -> MultiplierSymbol:
    _check_order(order)
    parity = "even-real" if order % 2 == 0 else "odd-imaginary"
    return MultiplierSymbol(lambda xi: (1j * TWO_PI * xi) ** order, parity, f"d{order}")


def ilw_symbol(delta: float, mode: str = "L") -> MultiplierSymbol:
    """Symbol of L_delta composed with 0, 1 or 2 derivatives

    sigma(L_delta) = -i coth(2 pi delta xi). At xi = 0 the composed symbols take
    their limits: d_x L_delta -> 1/delta, d_x^2 L_delta -> 0. Mode "L" has a
    genuine pole there and is set to 0, so it annihilates the mean.
    """
    _check_delta(delta)
    if mode not in ILW_MODES:
        raise ValueError(f"mode must be one of {ILW_MODES}, got {mode!r}")

    if mode == "L":
        def evaluator(xi):
            return np.where(xi == 0, 0.0, -1j * coth(TWO_PI * delta * xi))
        return MultiplierSymbol(evaluator, "odd-imaginary", f"L_delta[{delta}]")

    if mode == "L_dx":
        # 2 pi xi coth(2 pi delta xi) = (z coth z) / delta
        def evaluator(xi):
            return (1.0 + zcothz_minus_one(TWO_PI * delta * xi)) / delta + 0j
        return MultiplierSymbol(evaluator, "even-real", f"dx L_delta[{delta}]")

    def evaluator(xi):
        return 1j * TWO_PI * xi * (1.0 + zcothz_minus_one(TWO_PI * delta * xi)) / delta
    return MultiplierSymbol(evaluator, "odd-imaginary", f"dxx L_delta[{delta}]")


def _check_order(order):
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < 0:
        raise ValueError(f"derivative order must be a non-negative integer, got {order!r}")
    if order > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}")


def _check_delta(delta):
    if delta is None or not math.isfinite(delta) or delta <= 0:
        raise ValueError(f"delta must be positive, got {delta!r}")


def hilbert(u: Field) -> Field:
    """Hilbert transform, multiplier -i sgn(xi) with sgn(0) = 0"""
    return apply_multiplier(u, hilbert_symbol())


def ilw_apply(u: Field, delta: float, mode: str = "L") -> Field:
    return apply_multiplier(u, ilw_symbol(delta, mode))


def derivative(u: Field, order: int = 1) -> Field:
    return apply_multiplier(u, derivative_symbol(order))


def dealias(u: Field) -> Field:
    """2/3 rule: zero every coefficient with |k| > n/3"""
    return Field.from_spectrum(u.grid, u.spectrum * u.grid.dealias_mask, real=u.is_real)


@lru_cache(maxsize=128)
def derivative_values(grid: TorusGrid, order: int) -> np.ndarray:
    """Cached (2 pi i xi)^order on the grid, read-only"""
    values = symbol_values(grid, derivative_symbol(order))
    values.flags.writeable = False
    return values


@lru_cache(maxsize=32)
def hilbert_values(grid: TorusGrid) -> np.ndarray:
    values = symbol_values(grid, hilbert_symbol())
    values.flags.writeable = False
    return values


def product_spectrum(grid: TorusGrid, physical: np.ndarray) -> np.ndarray:
    """Forward transform of a pointwise product, truncated by the 2/3 rule"""
    return forward_transform(grid, physical) * grid.dealias_mask


def real_samples(grid: TorusGrid, spectrum: np.ndarray) -> np.ndarray:
    return inverse_transform(grid, spectrum).real


def inner_product(f: Field, g: Field) -> float:
    """Discrete L2 pairing sum f conj(g) h (real part)"""
    return float(np.real(np.sum(f.samples * np.conj(g.samples))) * f.grid.spacing)


def random_band_limited(grid: TorusGrid, rng: np.random.Generator, max_mode: Optional[int] = None,
                        zero_mean: bool = False) -> Field:
    """Real random field with modes |k| <= max_mode and no Nyquist content"""
    kmax = grid.n // 2 - 1 if max_mode is None else min(max_mode, grid.n // 2 - 1)
    k = grid.mode_numbers
    coeffs = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    coeffs[np.abs(k) > kmax] = 0.0
    coeffs[grid.nyquist_index] = 0.0
    if zero_mean:
        coeffs[0] = 0.0
    samples = np.real(sp_fft.ifft(coeffs)) * grid.n
    return Field(grid, samples / max(np.max(np.abs(samples)), 1e-300))
