"""Locality analysis for banded symmetric positive-definite matrices.

A capacitance network with finite-range coupling has a sparse, banded SPD
matrix C, but the physics (charging energies, exchange couplings) lives in
C^{-1}, which is dense.  The entries of C^{-1} nevertheless decay
exponentially with distance whenever C is gapped.  This module provides

* exact dense inversion (the oracle for everything else),
* the hyperbolic-sine closed form for tridiagonal Toeplitz chains,
* a walk-counting bound on |C^{-1}_ij| in graph distance,
* the discrete-sine spectral inverse for separable 2D lattices,
* the continuum screening rate kappa = sqrt(2*(a - 4|b|)/|b|), and
* log-linear fitting of the observed decay rate per distance shell.

All matrices are stored dense; at the intended scale (n <= 512) a
band-compressed layout would buy nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

__all__ = [
    "BandedSPD",
    "ToeplitzTridiag",
    "Lattice2DSpec",
    "DecayEstimate",
    "WalkBound",
    "ContinuumScreening",
    "NotPositiveDefiniteError",
    "InsufficientShellsError",
    "toeplitz_inverse_closed_form",
    "toeplitz_decay_rate",
    "invert_dense",
    "neumann_walk_bound",
    "lattice2d_matrix",
    "lattice2d_inverse_spectral",
    "continuum_kappa",
    "fit_decay",
    "chain_positions",
    "grid_positions",
    "banded_to_json",
    "banded_from_json",
    "banded_to_csv",
    "banded_from_csv",
]

ZERO_FLOOR = 1e-14  # below double-precision meaningfulness after inversion


class NotPositiveDefiniteError(ValueError):
    """Input matrix failed an SPD requirement; carries the offending minor."""

    def __init__(self, message, minor=None):
        super().__init__(message)
        self.minor = minor


class InsufficientShellsError(ValueError):
    """Fewer usable distance shells than a decay fit needs."""


@dataclass(frozen=True)
class ToeplitzTridiag:
    """Symmetric tridiagonal Toeplitz chain: diagonal ``a``, off-diagonal ``b``.

    Positive definite iff a > 2|b| (required); b must be nonzero, otherwise
    the matrix is diagonal and the hyperbolic parametrization is undefined.
    """

    n: int
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"order must be >= 1, got {self.n}")
        if self.b == 0.0:
            raise ValueError("off-diagonal b must be nonzero; a diagonal "
                             "matrix inverts entrywise")
        if self.a <= 2.0 * abs(self.b):
            raise NotPositiveDefiniteError(
                f"need a > 2|b| for positive definiteness; a={self.a}, "
                f"2|b|={2 * abs(self.b)}")

    def dense(self) -> np.ndarray:
        m = np.diag(np.full(self.n, float(self.a)))
        off = np.full(self.n - 1, float(self.b))
        m += np.diag(off, 1) + np.diag(off, -1)
        return m

    def as_banded(self) -> "BandedSPD":
        return BandedSPD(self.dense(), bandwidth=1)


@dataclass
class BandedSPD:
    """Dense-stored symmetric positive-definite matrix with a known bandwidth.

    ``bandwidth`` is the largest |i-j| with a nonzero entry; entries beyond
    it must be exactly zero.  Positive definiteness is verified by Cholesky
    at construction.
    """

    dense: np.ndarray
    bandwidth: int

    def __post_init__(self):
        m = np.asarray(self.dense, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.array_equal(m, m.T):
            raise ValueError("matrix is not symmetric")
        n = m.shape[0]
        if not 0 <= self.bandwidth < max(n, 1):
            raise ValueError(f"bandwidth {self.bandwidth} out of range for order {n}")
        for k in range(self.bandwidth + 1, n):
            if np.any(np.diag(m, k) != 0.0):
                raise ValueError(f"nonzero entry outside stated bandwidth at offset {k}")
        _assert_spd(m)
        self.dense = m

    @property
    def order(self) -> int:
        return self.dense.shape[0]


@dataclass(frozen=True)
class Lattice2DSpec:
    """m x n nearest-neighbor lattice matrix a*I + b*(kronecker sum of paths).

    Positive definite when a > 4|b| (sufficient 2D gap condition).
    """

    m: int
    n: int
    a: float
    b: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.a <= 4.0 * abs(self.b):
            raise NotPositiveDefiniteError(
                f"need a > 4|b| for the 2D gap; a={self.a}, 4|b|={4 * abs(self.b)}")

    @property
    def gap(self) -> float:
        return self.a - 4.0 * abs(self.b)


@dataclass
class DecayEstimate:
    """Result of a log-linear decay fit: max|entry| per shell ~ c * exp(-gamma*d)."""

    gamma: float
    prefactor: float
    residual_norm: float
    metric: str
    distances: np.ndarray
    shell_maxima: np.ndarray

    @property
    def decay_length(self) -> float:
        return math.inf if self.gamma == 0.0 else 1.0 / self.gamma


@dataclass
class WalkBound:
    """Walk-counting bound on |C^{-1}| in graph distance.

    ``applicable`` is False when nu*bmax/split >= 1; the bound table is then
    absent (no guarantee) rather than raising.
    """

    applicable: bool
    ratio: float
    split: float
    max_degree: int
    max_entry: float
    spectral_norm: float
    distances: np.ndarray
    bounds: np.ndarray | None


@dataclass(frozen=True)
class ContinuumScreening:
    """Continuum screening rate for a gapped 2D lattice; kappa = 1/xi."""

    kappa: float | None
    xi: float | None
    gap: float
    regime: str  # "screened" | "gap-only" (b = 0) | "critical" (gap = 0)


def _assert_spd(m: np.ndarray) -> None:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        minor = _first_failing_minor(m)
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite; leading minor of order "
            f"{minor} is the first to fail", minor=minor) from None


def _first_failing_minor(m: np.ndarray) -> int:
    for k in range(1, m.shape[0] + 1):
        try:
            np.linalg.cholesky(m[:k, :k])
        except np.linalg.LinAlgError:
            return k
    return m.shape[0]


def _log_sinh(x: float) -> float:
    # log(sinh x) without overflow; for x > 30 the expansion is exact to ulp
    if x > 30.0:
        return x - math.log(2.0) + math.log1p(-math.exp(-2.0 * x))
    return math.log(math.sinh(x))


def toeplitz_decay_rate(t: ToeplitzTridiag) -> tuple[float, float]:
    """Hyperbolic rate of the chain: returns (theta, r) with r = exp(-theta).

    cosh(theta) = a / (2|b|); r = (a - sqrt(a^2 - 4 b^2)) / (2|b|).
    """
    ratio = t.a / (2.0 * abs(t.b))
    theta = math.acosh(ratio)
    r = (t.a - math.sqrt(t.a * t.a - 4.0 * t.b * t.b)) / (2.0 * abs(t.b))
    return theta, r


def toeplitz_inverse_closed_form(t: ToeplitzTridiag) -> np.ndarray:
    """Closed-form inverse of a tridiagonal Toeplitz chain.

    For i <= j (1-based),

        (T^-1)_ij = (-sgn b)^(i+j) / |b|
                    * sinh(i*theta) * sinh((n+1-j)*theta)
                    / (sinh(theta) * sinh((n+1)*theta)),

    evaluated in log space so that long chains (n*theta >> 700) do not
    overflow.  The alternating sign pattern appears only for b > 0.
    """
    n = t.n
    theta, _ = toeplitz_decay_rate(t)
    log_b = math.log(abs(t.b))
    log_s1 = _log_sinh(theta)
    log_sn1 = _log_sinh((n + 1) * theta)
    ls = np.array([_log_sinh(k * theta) for k in range(1, n + 1)])
    sgn = -1.0 if t.b > 0 else 1.0

    inv = np.empty((n, n))
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            mag = math.exp(ls[i - 1] + ls[n - j] - log_s1 - log_sn1 - log_b)
            val = mag * (sgn ** (i + j))
            inv[i - 1, j - 1] = val
            inv[j - 1, i - 1] = val
    return inv


def toeplitz_uniform_bound(t: ToeplitzTridiag, distance: np.ndarray) -> np.ndarray:
    """Uniform envelope |T^-1_ij| <= r^|i-j| / (|b| sinh theta)."""
    theta, r = toeplitz_decay_rate(t)
    return r ** np.asarray(distance, dtype=float) / (abs(t.b) * math.sinh(theta))


def toeplitz_infinite_chain_entry(t: ToeplitzTridiag, distance: int) -> float:
    """|entry| of the infinite-chain resolvent: r^d / sqrt(a^2 - 4 b^2)."""
    _, r = toeplitz_decay_rate(t)
    return r ** distance / math.sqrt(t.a * t.a - 4.0 * t.b * t.b)


def invert_dense(m: BandedSPD | np.ndarray) -> np.ndarray:
    """Cholesky-based dense inverse; output symmetrized exactly.

    Raises NotPositiveDefiniteError identifying the first failing leading
    minor when the input is not SPD.
    """
    a = m.dense if isinstance(m, BandedSPD) else np.asarray(m, dtype=float)
    if not np.allclose(a, a.T, rtol=0.0, atol=0.0):
        raise ValueError("matrix is not symmetric")
    try:
        factor = cho_factor(a, lower=True)
    except np.linalg.LinAlgError:
        minor = _first_failing_minor(a)
        raise NotPositiveDefiniteError(
            f"Cholesky failed; first non-positive leading minor has order {minor}",
            minor=minor) from None
    inv = cho_solve(factor, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def graph_distances(m: np.ndarray) -> np.ndarray:
    """All-pairs graph distance on the off-diagonal sparsity pattern of m."""
    pattern = (np.abs(m) > 0.0).astype(float)
    np.fill_diagonal(pattern, 0.0)
    dist = shortest_path(csr_matrix(pattern), method="D", unweighted=True)
    return dist


def neumann_walk_bound(m: BandedSPD | np.ndarray, split_a: float | None = None) -> WalkBound:
    """Walk-counting bound on |C^{-1}| via the splitting C = split*I - B.

    Every length-k walk contributing to (B^k)_ij carries at most
    max|B|^k, and there are at most nu^k of them (nu = max vertex degree,
    counting a nonzero diagonal of B as a self-loop).  Summing the
    geometric series from k = dist(i, j):

        |C^{-1}_ij| <= (1/split) * q^dist(i,j) / (1 - q),
        q = nu * max|B| / split.

    When q >= 1 the result is flagged inapplicable (no-guarantee) instead
    of raising.  The spectral norm ||B||_2 is reported as a diagnostic; it
    is not the constant of the walk bound.  ``split_a`` defaults to the
    largest diagonal entry of C.
    """
    c = m.dense if isinstance(m, BandedSPD) else np.asarray(m, dtype=float)
    n = c.shape[0]
    split = float(np.max(np.diag(c))) if split_a is None else float(split_a)
    if split <= 0:
        raise ValueError("split_a must be positive")
    b = split * np.eye(n) - c
    bmax = float(np.max(np.abs(b))) if n else 0.0
    degree = int(np.max(np.count_nonzero(b, axis=1))) if n else 0
    spectral = float(np.linalg.norm(b, 2)) if n else 0.0
    ratio = degree * bmax / split
    dist = graph_distances(b) if bmax > 0 else np.where(
        np.eye(n, dtype=bool), 0.0, np.inf)
    if ratio >= 1.0:
        return WalkBound(False, ratio, split, degree, bmax, spectral, dist, None)
    with np.errstate(over="ignore"):
        table = np.where(np.isinf(dist), 0.0, ratio ** dist) / (split * (1.0 - ratio))
    np.fill_diagonal(table, 1.0 / (split * (1.0 - ratio)))
    return WalkBound(True, ratio, split, degree, bmax, spectral, dist, table)


def lattice2d_matrix(spec: Lattice2DSpec) -> np.ndarray:
    """Dense a*I + b*(S_m (+) S_n) with row-major (x*n + y) site ordering."""
    sm = np.diag(np.ones(spec.m - 1), 1) + np.diag(np.ones(spec.m - 1), -1)
    sn = np.diag(np.ones(spec.n - 1), 1) + np.diag(np.ones(spec.n - 1), -1)
    size = spec.m * spec.n
    return (spec.a * np.eye(size)
            + spec.b * (np.kron(sm, np.eye(spec.n)) + np.kron(np.eye(spec.m), sn)))


def lattice2d_inverse_spectral(spec: Lattice2DSpec) -> np.ndarray:
    """Inverse of the separable 2D lattice matrix via the discrete-sine basis.

    Eigenvectors are products of the path-graph sine modes
    phi_p(x) = sqrt(2/(m+1)) sin(p pi x / (m+1)); eigenvalues
    a + b*(2 cos(p pi/(m+1)) + 2 cos(q pi/(n+1))) are bounded below by
    a - 4|b| > 0, which is the gap behind the exponential locality.
    """
    m, n = spec.m, spec.n
    if spec.b == 0.0:
        return np.eye(m * n) / spec.a
    x = np.arange(1, m + 1)
    p = np.arange(1, m + 1)
    phi = math.sqrt(2.0 / (m + 1)) * np.sin(np.outer(x, p) * math.pi / (m + 1))
    y = np.arange(1, n + 1)
    q = np.arange(1, n + 1)
    psi = math.sqrt(2.0 / (n + 1)) * np.sin(np.outer(y, q) * math.pi / (n + 1))
    lam = 2.0 * np.cos(p * math.pi / (m + 1))
    mu = 2.0 * np.cos(q * math.pi / (n + 1))
    eigs = spec.a + spec.b * (lam[:, None] + mu[None, :])
    modes = np.kron(phi, psi)          # (m*n, m*n): column (p,q) mode
    inv = (modes / eigs.reshape(-1)) @ modes.T
    return 0.5 * (inv + inv.T)


def continuum_kappa(spec: Lattice2DSpec) -> ContinuumScreening:
    """Continuum screening rate kappa = sqrt(2*(a - 4|b|)/|b|) and xi = 1/kappa.

    With b = 0 there is no hopping and the screened-propagator picture does
    not apply; the result is flagged "gap-only".
    """
    gap = spec.gap
    if spec.b == 0.0:
        return ContinuumScreening(None, None, gap, "gap-only")
    kappa = math.sqrt(2.0 * gap / abs(spec.b))
    if kappa == 0.0:
        return ContinuumScreening(0.0, math.inf, gap, "critical")
    return ContinuumScreening(kappa, 1.0 / kappa, gap, "screened")


def chain_positions(n: int) -> np.ndarray:
    return np.arange(n, dtype=float).reshape(-1, 1)


def grid_positions(m: int, n: int) -> np.ndarray:
    """Row-major (row, col) coordinates for an m x n grid."""
    rr, cc = np.divmod(np.arange(m * n), n)
    return np.stack([rr, cc], axis=1).astype(float)


def _pair_distances(positions: np.ndarray, metric: str,
                    matrix: np.ndarray | None = None) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if metric == "graph":
        if matrix is None:
            raise ValueError("graph metric needs the matrix for its sparsity pattern")
        return graph_distances(matrix)
    delta = pos[:, None, :] - pos[None, :, :]
    if metric == "manhattan":
        return np.abs(delta).sum(axis=2)
    if metric == "euclidean":
        return np.sqrt((delta ** 2).sum(axis=2))
    raise ValueError(f"unknown metric {metric!r}; use graph|manhattan|euclidean")


def fit_decay(inverse: np.ndarray, positions: np.ndarray, metric: str = "manhattan",
              floor: float = ZERO_FLOOR, interior_margin: int | None = None,
              bandwidth: int = 1, matrix: np.ndarray | None = None) -> DecayEstimate:
    """Log-linear fit of max|entry| per distance shell against distance.

    Shell statistics use the maximum (bounds are entrywise maxima, so the
    max is the honest comparator).  Sites within ``interior_margin`` of the
    chain/grid boundary are excluded by default (2x bandwidth), since the
    finite-chain closed form shows boundary-dependent prefactors.  Entries
    at or below ``floor`` are discarded.  Needs at least three usable
    shells.
    """
    inv = np.asarray(inverse, dtype=float)
    pos = np.asarray(positions, dtype=float)
    margin = 2 * bandwidth if interior_margin is None else interior_margin
    keep = np.ones(len(pos), dtype=bool)
    for axis in range(pos.shape[1]):
        lo, hi = pos[:, axis].min(), pos[:, axis].max()
        if hi - lo > 2 * margin:
            keep &= (pos[:, axis] >= lo + margin) & (pos[:, axis] <= hi - margin)
    idx = np.flatnonzero(keep)
    dist = _pair_distances(pos, metric, matrix)[np.ix_(idx, idx)]
    vals = np.abs(inv[np.ix_(idx, idx)])

    shells: dict[float, float] = {}
    for d, v in zip(dist.ravel(), vals.ravel()):
        if not math.isfinite(d):
            continue
        key = round(float(d), 9)
        shells[key] = max(shells.get(key, 0.0), float(v))
    pts = sorted((d, v) for d, v in shells.items() if v > floor)
    if len(pts) < 3:
        raise InsufficientShellsError(
            f"decay fit needs >= 3 usable shells above floor {floor:g}, got {len(pts)}")
    d_arr = np.array([p[0] for p in pts])
    logv = np.log([p[1] for p in pts])
    coeffs, residuals, *_ = np.polyfit(d_arr, logv, 1, full=True)
    slope, intercept = coeffs
    res_norm = math.sqrt(float(residuals[0])) if residuals.size else 0.0
    return DecayEstimate(gamma=-float(slope), prefactor=math.exp(float(intercept)),
                         residual_norm=res_norm, metric=metric,
                         distances=d_arr, shell_maxima=np.exp(logv))


# -- matrix I/O ---------------------------------------------------------------

def banded_to_json(m: BandedSPD) -> str:
    bands = [np.diag(m.dense, k).tolist() for k in range(m.bandwidth + 1)]
    return json.dumps({"order": m.order, "bandwidth": m.bandwidth, "bands": bands},
                      sort_keys=True)


def banded_from_json(text: str) -> BandedSPD:
    obj = json.loads(text)
    n, w = obj["order"], obj["bandwidth"]
    dense = np.zeros((n, n))
    for k, band in enumerate(obj["bands"]):
        band = np.asarray(band, dtype=float)
        if band.shape != (n - k,):
            raise ValueError(f"band {k} has length {band.shape[0]}, expected {n - k}")
        dense += np.diag(band, k)
        if k:
            dense += np.diag(band, -k)
    return BandedSPD(dense, bandwidth=w)


def banded_to_csv(m: BandedSPD) -> str:
    lines = [f"# n={m.order},w={m.bandwidth}"]
    for row in m.dense:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def banded_from_csv(text: str) -> BandedSPD:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    header = lines[0].lstrip("# ").replace(" ", "")
    fields = dict(part.split("=") for part in header.split(","))
    n, w = int(fields["n"]), int(fields["w"])
    dense = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if dense.shape != (n, n):
        raise ValueError(f"expected {n}x{n} payload, got {dense.shape}")
    return BandedSPD(dense, bandwidth=w)
