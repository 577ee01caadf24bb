"""Circuit parameters to transmon frequencies, couplings, and dressed values.

All quantities are cyclic frequencies in MHz.  Every relation used here is
homogeneous in the frequency unit, so the same code works unchanged in GHz
or kHz as long as inputs are uniform.

The dressing step removes excitation-changing terms at second order:
frequency shifts are -sum_k g_ik^2/(w_i + w_k) and coupling corrections are

    g'_ij = g_ij - (1/2) sum_{k != i,j} g_ik g_jk [1/(w_i+w_k) + 1/(w_j+w_k)].

These corrections matter: left out, they get misattributed to
enclosure-mediated coupling when fitting measured data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TransmonParams",
    "CouplingGraph",
    "DressedParams",
    "bare_frequency",
    "ej_for_frequency",
    "bare_coupling",
    "bare_coupling_dispersion",
    "bare_coupling_impedance_form",
    "swt_dress",
]

TRANSMON_REGIME_RATIO = 0.05  # default E_C/E_J threshold (1/20)


@dataclass(frozen=True)
class TransmonParams:
    """Charging and Josephson energies of one transmon, in MHz."""

    ec: float
    ej: float

    def __post_init__(self):
        if self.ec <= 0 or self.ej <= 0:
            raise ValueError(f"energies must be positive, got ec={self.ec}, ej={self.ej}")

    @property
    def omega(self) -> float:
        return bare_frequency(self)

    @property
    def alpha(self) -> float:
        """Anharmonicity in the leading transmon approximation: -E_C."""
        return -self.ec

    @property
    def impedance(self) -> float:
        """Characteristic impedance sqrt(8 E_C / E_J) (dimensionless here)."""
        return np.sqrt(8.0 * self.ec / self.ej)

    def in_transmon_regime(self, ratio: float = TRANSMON_REGIME_RATIO) -> bool:
        return self.ec / self.ej <= ratio


@dataclass
class CouplingGraph:
    """Symmetric edge list over n nodes; strengths are couplings g in MHz.

    Edges are stored once with i < j; querying (j, i) returns the same value.
    """

    n: int
    edges: dict = field(default_factory=dict)

    def add(self, i: int, j: int, g: float) -> None:
        if i == j:
            raise ValueError(f"self-edge on node {i}")
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
        if not np.isfinite(g):
            raise ValueError(f"edge ({i}, {j}) strength is not finite")
        self.edges[(min(i, j), max(i, j))] = float(g)

    def g(self, i: int, j: int) -> float:
        return self.edges.get((min(i, j), max(i, j)), 0.0)

    def to_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for (i, j), g in self.edges.items():
            m[i, j] = m[j, i] = g
        return m


@dataclass
class DressedParams:
    """Second-order dressed frequencies and couplings."""

    omega_bare: np.ndarray
    omega_dressed: np.ndarray
    g_bare: np.ndarray
    g_dressed: np.ndarray

    @property
    def frequency_shifts(self) -> np.ndarray:
        return self.omega_dressed - self.omega_bare

    @property
    def coupling_corrections(self) -> np.ndarray:
        return self.g_dressed - self.g_bare


def bare_frequency(p: TransmonParams) -> float:
    """0-1 transition frequency sqrt(8 E_C E_J) - E_C."""
    return np.sqrt(8.0 * p.ec * p.ej) - p.ec


def ej_for_frequency(omega: float, ec: float) -> float:
    """Josephson energy giving the requested bare frequency at fixed E_C."""
    if omega <= 0 or ec <= 0:
        raise ValueError("omega and ec must be positive")
    return (omega + ec) ** 2 / (8.0 * ec)


def bare_coupling(i: TransmonParams, j: TransmonParams, ec_ij: float) -> float:
    """Exchange coupling from the mutual charging energy E_C,ij.

    g_ij = E_C,ij / (4 E_C,i E_C,j)^(1/4) * (E_J,i E_J,j)^(1/4)
    """
    return ec_ij / (4.0 * i.ec * j.ec) ** 0.25 * (i.ej * j.ej) ** 0.25


def bare_coupling_dispersion(i: TransmonParams, j: TransmonParams, ec_ij: float,
                             omega_i: float | None = None,
                             omega_j: float | None = None) -> float:
    """Dispersion form g ~ E_C,ij / sqrt(16 E_C,i E_C,j) * sqrt(w_i w_j).

    Exposes the sqrt(w_i w_j) frequency dependence explicitly; agrees with
    ``bare_coupling`` up to the E_C correction hidden in w = sqrt(8 Ec Ej) - Ec.
    """
    wi = bare_frequency(i) if omega_i is None else omega_i
    wj = bare_frequency(j) if omega_j is None else omega_j
    return ec_ij / np.sqrt(16.0 * i.ec * j.ec) * np.sqrt(wi * wj)


def bare_coupling_impedance_form(i: TransmonParams, j: TransmonParams,
                                 ec_ij: float) -> float:
    """Equivalent impedance form 2 E_C,ij / sqrt(Z_i Z_j); equals bare_coupling."""
    return 2.0 * ec_ij / np.sqrt(i.impedance * j.impedance)


def swt_dress(graph: CouplingGraph, params: list[TransmonParams] | np.ndarray,
              omegas: np.ndarray | None = None) -> DressedParams:
    """Dress frequencies and couplings at second order in g.

    ``params`` may be TransmonParams (bare frequencies derived) or ignored
    entirely when ``omegas`` supplies the frequencies directly.  The sums
    run over existing edges only; an absent edge is g = 0.
    """
    if omegas is not None:
        w = np.asarray(omegas, dtype=float)
    else:
        w = np.array([bare_frequency(p) for p in params])
    n = graph.n
    if len(w) != n:
        raise ValueError(f"{len(w)} frequencies for a {n}-node graph")
    if np.any(w <= 0):
        raise ValueError("all bare frequencies must be positive")
    g = graph.to_matrix()

    inv_sum = 1.0 / (w[:, None] + w[None, :])       # 1/(w_i + w_k)
    w_dressed = w - np.sum(g * g * inv_sum, axis=1)  # diagonal of g is zero

    g_dressed = g.copy()
    for (i, j) in graph.edges:
        corr = 0.0
        for k in range(n):
            if k == i or k == j:
                continue
            gik, gjk = g[i, k], g[j, k]
            if gik == 0.0 or gjk == 0.0:
                continue
            corr += gik * gjk * (inv_sum[i, k] + inv_sum[j, k])
        g_dressed[i, j] -= 0.5 * corr
        g_dressed[j, i] = g_dressed[i, j]
    # second-order paths also induce couplings on absent edges
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in graph.edges:
                continue
            corr = 0.0
            for k in range(n):
                if k == i or k == j:
                    continue
                gik, gjk = g[i, k], g[j, k]
                if gik == 0.0 or gjk == 0.0:
                    continue
                corr += gik * gjk * (inv_sum[i, k] + inv_sum[j, k])
            if corr:
                g_dressed[i, j] = g_dressed[j, i] = -0.5 * corr
    return DressedParams(omega_bare=w, omega_dressed=w_dressed,
                         g_bare=g, g_dressed=g_dressed)
