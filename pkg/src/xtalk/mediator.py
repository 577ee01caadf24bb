"""Effective coupling through a chain of far-detuned mediator modes.

Two endpoint modes talk through M intermediate modes in a linear chain.
When every mediator is far detuned, the leading-order coupling is the
product of link strengths over the product of mediator detunings,

    J_prod = (prod_n g_{n,n+1}) / (prod_n Delta_n)
           = gbar * (gbar / Dbar)^M        (geometric-mean form),

which makes the exponential suppression in chain length explicit.

The exact reference eliminates the mediator block of the
excitation-preserving chain Hamiltonian by a Schur complement at probe
energy E:

    G(E) = g_{0,1} [ (E I - H_med)^{-1} ]_{1,M} g_{M,M+1},

and by default symmetrizes over the two endpoint frequencies,
J_exact = (G(w1) + G(w2)) / 2, which for M = 1 reduces algebraically to
the standard second-order result
(g1 g2 / 2) [1/(w1 - wc) + 1/(w2 - wc)].

Sign conventions: mediators above the endpoint band make G(E) negative
while the product formula is a magnitude; both are reported and the sign
is never silently reconciled.  Capacitive chains map onto the same
formulas after the usual parameter substitution (caller's mapping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MediatorChain",
    "ProductEstimate",
    "ResonanceError",
    "jeff_product",
    "jeff_single_exact",
    "jeff_chain_exact",
]


class ResonanceError(ValueError):
    """A mediator is (numerically) resonant with the probe frequency."""

    def __init__(self, message, mediator_index=None):
        super().__init__(message)
        self.mediator_index = mediator_index


@dataclass(frozen=True)
class MediatorChain:
    """Endpoint frequencies, M mediator frequencies, and M+1 link couplings (MHz)."""

    omega1: float
    omega2: float
    mediators: tuple
    links: tuple

    def __post_init__(self):
        object.__setattr__(self, "mediators", tuple(float(v) for v in self.mediators))
        object.__setattr__(self, "links", tuple(float(v) for v in self.links))
        if self.omega1 <= 0 or self.omega2 <= 0 or any(w <= 0 for w in self.mediators):
            raise ValueError("all mode frequencies must be positive")
        if len(self.links) != len(self.mediators) + 1:
            raise ValueError(
                f"{len(self.mediators)} mediators need "
                f"{len(self.mediators) + 1} links, got {len(self.links)}")

    @property
    def m(self) -> int:
        return len(self.mediators)

    @property
    def mean_end_frequency(self) -> float:
        return 0.5 * (self.omega1 + self.omega2)

    @property
    def detunings(self) -> np.ndarray:
        """|wbar - w_c,n| per mediator, wbar the endpoint mean."""
        wbar = self.mean_end_frequency
        return np.abs(wbar - np.asarray(self.mediators))

    @property
    def dispersive_ratios(self) -> np.ndarray:
        """max(adjacent link)/Delta_n per mediator; small means dispersive."""
        g = np.asarray(self.links)
        adj = np.maximum(np.abs(g[:-1]), np.abs(g[1:]))
        with np.errstate(divide="ignore"):
            return adj / self.detunings

    def reversed(self) -> "MediatorChain":
        return MediatorChain(self.omega2, self.omega1,
                             self.mediators[::-1], self.links[::-1])


@dataclass(frozen=True)
class ProductEstimate:
    """Product-over-detunings estimate with its geometric-mean decomposition."""

    value: float
    g_mean: float
    delta_mean: float

    @property
    def geometric_form(self) -> float:
        """gbar * (gbar/Dbar)^M reconstructed from the means; equals |value|."""
        m = round(math.log(abs(self.value) / self.g_mean, self.g_mean / self.delta_mean)) \
            if 0 < self.g_mean != self.delta_mean and self.value else 0
        return self.g_mean * (self.g_mean / self.delta_mean) ** m


def jeff_product(chain: MediatorChain) -> ProductEstimate:
    """Leading-order chain coupling: (prod links) / (prod detunings).

    Requires M >= 1 and every detuning nonzero.  The returned magnitude
    carries the sign of the link product; mediation-induced sign flips
    beyond that are outside this approximation.
    """
    if chain.m < 1:
        raise ValueError("product formula needs at least one mediator")
    deltas = chain.detunings
    resonant = np.flatnonzero(deltas == 0.0)
    if resonant.size:
        raise ResonanceError(
            f"mediator {resonant[0]} is resonant with the endpoint mean frequency",
            mediator_index=int(resonant[0]))
    g = np.asarray(chain.links)
    value = float(np.prod(g) / np.prod(deltas))
    gbar = float(np.prod(np.abs(g))) ** (1.0 / len(g)) if np.all(g != 0) else 0.0
    dbar = float(np.prod(deltas)) ** (1.0 / chain.m)
    return ProductEstimate(value=value, g_mean=gbar, delta_mean=dbar)


def jeff_single_exact(chain: MediatorChain) -> float:
    """Second-order result for one mediator, signed:

    (g1 g2 / 2) [1/(w1 - wc) + 1/(w2 - wc)].
    """
    if chain.m != 1:
        raise ValueError(f"single-mediator formula called with M={chain.m}")
    wc = chain.mediators[0]
    for w in (chain.omega1, chain.omega2):
        if w == wc:
            raise ResonanceError("endpoint resonant with the mediator", mediator_index=0)
    g1, g2 = chain.links
    return 0.5 * g1 * g2 * (1.0 / (chain.omega1 - wc) + 1.0 / (chain.omega2 - wc))


def _mediator_block(chain: MediatorChain) -> np.ndarray:
    m = chain.m
    h = np.diag(np.asarray(chain.mediators, dtype=float))
    inner = np.asarray(chain.links[1:-1], dtype=float)
    if m > 1:
        h += np.diag(inner, 1) + np.diag(inner, -1)
    return h


def _transfer(chain: MediatorChain, energy: float) -> float:
    h = _mediator_block(chain)
    m = chain.m
    a = energy * np.eye(m) - h
    evals = np.linalg.eigvalsh(h)
    gap = np.abs(evals - energy)
    if np.min(gap) < 1e-9 * max(abs(energy), 1.0):
        raise ResonanceError(
            f"probe frequency {energy} is resonant with chain mode "
            f"{int(np.argmin(gap))} at {evals[np.argmin(gap)]}",
            mediator_index=int(np.argmin(gap)))
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    col = np.linalg.solve(a, rhs)     # column M of (E - H)^{-1}
    return float(chain.links[0] * col[0] * chain.links[-1])


def jeff_chain_exact(chain: MediatorChain, probe: float | None = None) -> float:
    """Exact elimination of the mediator block, to all orders in g/Delta.

    With ``probe`` given, returns the transfer G(probe).  Without it,
    returns the endpoint-symmetrized value (G(w1) + G(w2))/2, which is the
    quantity the product formula approximates and reduces exactly to
    ``jeff_single_exact`` at M = 1.  A chain with M = 0 is a direct link
    and returns its single coupling.
    """
    if chain.m == 0:
        return float(chain.links[0])
    if probe is not None:
        return _transfer(chain, probe)
    return 0.5 * (_transfer(chain, chain.omega1) + _transfer(chain, chain.omega2))
