"""
Radial eigenbasis of the 2D harmonic oscillator H = -Delta + |x|^2.

    h_n(r) = pi^{-1/2} L_n(r^2) exp(-r^2/2),   H h_n = (4n + 2) h_n

Rows are generated by the three-term Laguerre recurrence in u = r^2,
never by expanding the polynomials. The quadrature is Gauss-Laguerre in u with
nodes from the eigenvalues of the Jacobi matrix;
its weights are taken from the Christoffel function of the same recurrence
so that nothing underflows at the outer nodes:

    omega_j = 1 / sum_{k < K} h_k(r_j)^2,   sum_j omega_j f(r_j) ~ int_{R^2} f
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from src.errors import ConfigurationError, SpectralConsistencyError

INV_SQRT_PI = 1.0 / math.sqrt(math.pi)

# rescale threshold for the per-node recurrence; squares must stay finite
_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class BasisSpec:
    n_modes: int
    quad_order: Optional[int] = None

    def __post_init__(self):
        if self.n_modes < 1:
            raise ConfigurationError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.quad_order is None:
            object.__setattr__(self, 'quad_order', 4 * self.n_modes)
        if self.quad_order < 2 * self.n_modes:
            raise ConfigurationError(
                f"quad_order ({self.quad_order}) must be >= 2*n_modes ({2 * self.n_modes})")


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray     # radii r_j
    weights: np.ndarray   # omega_j, area weights on R^2

    @property
    def u(self) -> np.ndarray:
        return self.nodes ** 2

    def integrate(self, grid_values: np.ndarray) -> complex:
        return np.dot(self.weights, grid_values)


@dataclass(frozen=True)
class BasisTable:
    values: np.ndarray       # [n, j] = h_n(r_j)
    eigenvalues: np.ndarray  # 4n + 2

    @property
    def n_modes(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Basis:
    """Table and rule travelling together; what every other module takes."""
    spec: BasisSpec
    table: BasisTable
    rule: QuadratureRule

    @property
    def n_modes(self) -> int:
        return self.spec.n_modes

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.table.eigenvalues


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


# ============================================================================
# RECURRENCE
# ============================================================================

def _laguerre_rows(u: np.ndarray, n_rows: int, n_total: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    phi_k(u) = L_k(u) exp(-u/2) for k < n_rows, plus log(sum_{k<n_total} phi_k^2).

    Each node carries its own log-scale so neither the polynomial growth
    nor the Gaussian factor over/underflows.
    """
    u = np.asarray(u, dtype=float)
    p_prev = np.zeros_like(u)
    p = np.ones_like(u)
    log_scale = -0.5 * u
    sumsq = np.zeros_like(u)
    rows = np.zeros((n_rows, u.size))

    for k in range(n_total):
        if k < n_rows:
            with np.errstate(under='ignore'):
                rows[k] = p * np.exp(log_scale)
        sumsq += p * p
        p_next = ((2 * k + 1 - u) * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next

        big = np.abs(p) > _RESCALE
        if big.any():
            p[big] /= _RESCALE
            p_prev[big] /= _RESCALE
            sumsq[big] /= _RESCALE ** 2
            log_scale[big] += _LOG_RESCALE

    log_sumsq = np.log(sumsq) + 2.0 * log_scale
    return rows, log_sumsq


def _newton_step(u: np.ndarray, n: int) -> np.ndarray:
    """One Newton step on L_n(u) = 0, using u L_n' = n (L_n - L_{n-1})."""
    p_prev = np.zeros_like(u)
    p = np.ones_like(u)
    for k in range(n):
        p_next = ((2 * k + 1 - u) * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
        big = np.abs(p) > _RESCALE
        if big.any():
            p[big] /= _RESCALE
            p_prev[big] /= _RESCALE
    return u - u * p / (n * (p - p_prev))


def laguerre_nodes(order: int) -> np.ndarray:
    """
    Gauss-Laguerre nodes from the Jacobi matrix (Golub-Welsch), polished by Newton.

    The Jacobi matrix of L_k has diagonal 2k + 1 and off-diagonal k.
    """
    k = np.arange(order, dtype=float)
    nodes = linalg.eigh_tridiagonal(2.0 * k + 1.0, k[1:], eigvals_only=True)
    with np.errstate(all='ignore'):
        nodes = _newton_step(nodes, order)
    if not np.all(np.isfinite(nodes)) or np.any(nodes <= 0.0):
        raise SpectralConsistencyError(f"Gauss-Laguerre nodes of order {order} are not finite and positive")
    if np.any(np.diff(nodes) <= 0.0):
        raise SpectralConsistencyError(f"Gauss-Laguerre nodes of order {order} are not distinct")
    return nodes


def build_basis(spec: BasisSpec) -> Tuple[BasisTable, QuadratureRule]:
    """Orthonormal table h_n(r_j) for n < n_modes and the matching area rule."""
    u_nodes = laguerre_nodes(spec.quad_order)
    rows, log_sumsq = _laguerre_rows(u_nodes, spec.n_modes, spec.quad_order)

    values = INV_SQRT_PI * rows
    # 1/sum h_k^2 = pi/sum phi_k^2
    weights = np.exp(math.log(math.pi) - log_sumsq)

    table = BasisTable(
        values=_readonly(values),
        eigenvalues=_readonly(4.0 * np.arange(spec.n_modes) + 2.0),
    )
    rule = QuadratureRule(nodes=_readonly(np.sqrt(u_nodes)), weights=_readonly(weights))
    return table, rule


def make_basis(n_modes: int, quad_order: Optional[int] = None) -> Basis:
    spec = BasisSpec(n_modes=n_modes, quad_order=quad_order)
    table, rule = build_basis(spec)
    return Basis(spec=spec, table=table, rule=rule)


# ============================================================================
# EVALUATION OFF THE NODES
# ============================================================================

def evaluate_basis(n_modes: int, r: np.ndarray, derivatives: int = 0) -> np.ndarray:
    """
    h_n and its radial derivatives at arbitrary radii.

    Args:
        n_modes: number of rows
        r: radii (any shape is flattened)
        derivatives: highest order d^k/dr^k returned, 0..2

    Returns:
        array [k, n, i] with k = 0..derivatives
    """
    if derivatives not in (0, 1, 2):
        raise ValueError(f"derivatives must be 0, 1 or 2, got {derivatives}")
    r = np.ravel(np.asarray(r, dtype=float))
    u = r ** 2
    phi, _ = _laguerre_rows(u, n_modes, n_modes)

    # d/du phi_n = -sum_{k<n} phi_k - phi_n/2
    dphi = -_exclusive_cumsum(phi) - 0.5 * phi
    d2phi = -_exclusive_cumsum(dphi) - 0.5 * dphi

    out = np.empty((derivatives + 1, n_modes, r.size))
    out[0] = phi
    if derivatives >= 1:
        out[1] = 2.0 * r * dphi
    if derivatives >= 2:
        out[2] = 2.0 * dphi + 4.0 * u * d2phi
    return INV_SQRT_PI * out


def radial_laplacian(n_modes: int, r: np.ndarray) -> np.ndarray:
    """Delta h_n = 4u h_uu + 4 h_u, rows [n, i]."""
    r = np.ravel(np.asarray(r, dtype=float))
    u = r ** 2
    phi, _ = _laguerre_rows(u, n_modes, n_modes)
    dphi = -_exclusive_cumsum(phi) - 0.5 * phi
    d2phi = -_exclusive_cumsum(dphi) - 0.5 * dphi
    return INV_SQRT_PI * (4.0 * u * d2phi + 4.0 * dphi)


def _exclusive_cumsum(rows: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rows)
    out[1:] = np.cumsum(rows[:-1], axis=0)
    return out


def eigen_residuals(basis: Basis) -> np.ndarray:
    """||(-Delta + r^2) h_n - (4n+2) h_n||_{L^2} for each retained n."""
    r = basis.rule.nodes
    values = basis.table.values
    lap = radial_laplacian(basis.n_modes, r)
    residual = -lap + (r ** 2) * values - basis.table.eigenvalues[:, None] * values
    return np.sqrt(np.abs(residual ** 2 @ basis.rule.weights))
