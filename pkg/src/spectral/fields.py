"""
Spectral fields: coefficient vectors against h_n and the operators on them.

    ||u||^2_{H^r} = sum_n (4n + 2)^r |alpha_n|^2
    H h_n      = (4n + 2) h_n
    r^2 h_n    = -(n+1) h_{n+1} + (2n+1) h_n - n h_{n-1}
    (y.grad) h_n = (n+1) h_{n+1} - h_n - n h_{n-1}

Pointwise products go through the quadrature grid (synthesize, multiply,
analyze).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from src.errors import ShapeError
from src.spectral.basis import Basis, BasisTable, QuadratureRule

ArrayLike = Union['SpectralField', np.ndarray]


@dataclass(frozen=True)
class SpectralField:
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def zeros(cls, n_modes: int) -> 'SpectralField':
        return cls(np.zeros(n_modes))

    @classmethod
    def unit(cls, n: int, n_modes: int) -> 'SpectralField':
        coeffs = np.zeros(n_modes)
        coeffs[n] = 1.0
        return cls(coeffs)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @property
    def real(self) -> np.ndarray:
        return self.coeffs.real.copy()

    @property
    def imag(self) -> np.ndarray:
        return self.coeffs.imag.copy()

    def is_real(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= atol))

    def __add__(self, other: 'SpectralField') -> 'SpectralField':
        return SpectralField(self.coeffs + _coeffs(other))

    def __sub__(self, other: 'SpectralField') -> 'SpectralField':
        return SpectralField(self.coeffs - _coeffs(other))

    def __mul__(self, scalar: complex) -> 'SpectralField':
        return SpectralField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> 'SpectralField':
        return SpectralField(-self.coeffs)


@dataclass
class TruncationCounter:
    """Tallies coefficients dropped when an operator leaves the retained span."""
    calls: int = 0
    dropped_l2: float = 0.0
    max_dropped: float = 0.0

    def record(self, dropped: complex) -> None:
        self.calls += 1
        self.dropped_l2 = math.hypot(self.dropped_l2, abs(dropped))
        self.max_dropped = max(self.max_dropped, abs(dropped))


def _coeffs(value: ArrayLike) -> np.ndarray:
    if isinstance(value, SpectralField):
        return value.coeffs
    return np.asarray(value)


def _eigenvalues(n_modes: int) -> np.ndarray:
    return 4.0 * np.arange(n_modes) + 2.0


# ============================================================================
# TRANSFORMS
# ============================================================================

def analyze(grid_values: np.ndarray, table: BasisTable, rule: QuadratureRule) -> SpectralField:
    """alpha_n = sum_j omega_j f(r_j) h_n(r_j)"""
    grid_values = np.asarray(grid_values)
    if grid_values.shape != rule.nodes.shape:
        raise ShapeError(
            f"grid has {grid_values.shape} values, rule has {rule.nodes.shape} nodes")
    return SpectralField(table.values @ (rule.weights * grid_values))


def synthesize(field: ArrayLike, table: BasisTable) -> np.ndarray:
    coeffs = _coeffs(field)
    if coeffs.shape[0] != table.n_modes:
        raise ShapeError(f"field has {coeffs.shape[0]} modes, table has {table.n_modes}")
    return table.values.T @ coeffs


# ============================================================================
# NORMS AND INNER PRODUCTS
# ============================================================================

def norm_hxr(field: ArrayLike, r: float) -> float:
    coeffs = _coeffs(field)
    weights = _eigenvalues(coeffs.shape[0]) ** r
    return float(np.sqrt(np.sum(weights * np.abs(coeffs) ** 2)))


def inner(f: ArrayLike, g: ArrayLike) -> complex:
    """<f, g> = int f conj(g)"""
    return complex(np.vdot(_coeffs(g), _coeffs(f)))


# ============================================================================
# OPERATORS
# ============================================================================

def apply_h(field: ArrayLike) -> SpectralField:
    coeffs = _coeffs(field)
    return SpectralField(_eigenvalues(coeffs.shape[0]) * coeffs)


def apply_y2(field: ArrayLike, counter: Optional[TruncationCounter] = None) -> SpectralField:
    """
    Multiplication by |y|^2 through the tridiagonal Laguerre recurrence.

    Computed in an (N+1)-mode buffer; the overflow coefficient on h_N is
    dropped and, when a counter is passed, recorded there.
    """
    coeffs = _coeffs(field)
    n_modes = coeffs.shape[0]
    if n_modes < 2:
        raise ShapeError("apply_y2 needs at least 2 modes")
    n = np.arange(n_modes)
    buffer = np.zeros(n_modes + 1, dtype=complex)
    buffer[:n_modes] += (2 * n + 1) * coeffs
    buffer[1:n_modes + 1] -= (n + 1) * coeffs
    buffer[:n_modes - 1] -= n[1:] * coeffs[1:]
    if counter is not None:
        counter.record(buffer[n_modes])
    return SpectralField(buffer[:n_modes])


def apply_dilation(field: ArrayLike) -> SpectralField:
    """Lambda = y.grad, truncated to the retained span."""
    coeffs = _coeffs(field)
    n_modes = coeffs.shape[0]
    n = np.arange(n_modes)
    out = -coeffs.astype(complex)
    out[1:] += n[1:] * coeffs[:-1]
    out[:-1] -= n[1:] * coeffs[1:]
    return SpectralField(out)


def y2_matrix(n_modes: int) -> np.ndarray:
    n = np.arange(n_modes, dtype=float)
    off = -n[1:]
    return np.diag(2 * n + 1) + np.diag(off, 1) + np.diag(off, -1)


def multiplication_matrix(grid_values: np.ndarray, basis: Basis) -> np.ndarray:
    """Galerkin matrix of f -> g f: M_nm = int g h_n h_m."""
    table, rule = basis.table, basis.rule
    return (table.values * (rule.weights * grid_values)) @ table.values.T


def cubic(field_a: ArrayLike, field_b: ArrayLike, field_c: ArrayLike,
          table: BasisTable, rule: QuadratureRule) -> SpectralField:
    """analyze(a b conj(c)) on the quadrature grid."""
    a = synthesize(field_a, table)
    b = synthesize(field_b, table)
    c = synthesize(field_c, table)
    return analyze(a * b * np.conj(c), table, rule)


def product(field_a: ArrayLike, field_b: ArrayLike, basis: Basis) -> SpectralField:
    a = synthesize(field_a, basis.table)
    b = synthesize(field_b, basis.table)
    return analyze(a * b, basis.table, basis.rule)


# ============================================================================
# INEQUALITY CHECKS
# ============================================================================

def norm_estimate_constant(eps: float, r: float, s: float) -> Tuple[int, float]:
    """
    (N_eps, C) with ||u||^2_{H^s} <= eps ||u||^2_{H^r} + C ||u||^2_{L^2}, 0 <= s < r.

    N_eps is the first mode with (4n+2)^{s-r} <= eps; C = (4 N_eps + 2)^s.
    """
    if not 0 <= s < r:
        raise ValueError(f"need 0 <= s < r, got s={s}, r={r}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    threshold = eps ** (1.0 / (s - r))
    n_eps = max(0, math.ceil((threshold - 2.0) / 4.0))
    return n_eps, (4.0 * n_eps + 2.0) ** s


def algebra_ratio(f: ArrayLike, g: ArrayLike, r: float, basis: Basis) -> float:
    """||f g||_{H^r} / (||f||_{H^r} ||g||_{H^r})"""
    denominator = norm_hxr(f, r) * norm_hxr(g, r)
    if denominator == 0.0:
        return 0.0
    return norm_hxr(product(f, g, basis), r) / denominator


def y2_ratio(f: ArrayLike, r: float) -> float:
    """||y^2 f||_{H^r} / ||f||_{H^{r+1}}"""
    denominator = norm_hxr(f, r + 1)
    if denominator == 0.0:
        return 0.0
    return norm_hxr(apply_y2(f), r) / denominator
