"""Self-contained Bessel evaluations used by the enclosure screening model.

Only order zero is needed: K0 for the below-cutoff (evanescent) Green's
function, and H0^(1) = J0 + i Y0 above cutoff.  No external
special-function library is assumed.

K0 strategy:
  * x <= 2: ascending series K0 = -(log(x/2) + gamma) I0(x) + sum_k H_k q^k/(k!)^2
    with q = x^2/4 (converges to machine precision in < 20 terms).
  * x > 2: the exact Laplace representation
        K0(x) = e^-x * Int_{-inf}^{inf} e^{-t^2} (t^2 + 2x)^{-1/2} dt
    evaluated with fixed Gauss-Hermite nodes.  The integrand's poles sit at
    +-i*sqrt(2x), at least 2 away from the real axis, so 96 nodes hold the
    relative error near 1e-13 across (2, 700].  A truncated large-x
    asymptotic expansion cannot reach that accuracy near the crossover (its
    optimally-truncated error at x = 2 is only ~5e-3), which is why the
    integral form is used instead.

J0/Y0 strategy: ascending series up to x = 12, then the one-sided Hankel
asymptotic series with optimal truncation (error well under 1e-9 there).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["k0", "k0_scaled", "i0", "j0", "y0", "h0_first_kind"]

EULER_GAMMA = 0.5772156649015328606

_HERMITE_NODES, _HERMITE_WEIGHTS = np.polynomial.hermite.hermgauss(96)


def i0(x: float) -> float:
    """Modified Bessel I0 by its ascending series (intended for |x| <= 2)."""
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        term *= q / (k * k)
        total += term
        if term < 1e-18 * total:
            break
    return total


def k0(x: float) -> float:
    """Modified Bessel function of the second kind, order zero.

    Domain x > 0 (logarithmic singularity at the origin).
    """
    if x <= 0.0:
        raise ValueError(f"k0 requires x > 0, got {x}")
    if x <= 2.0:
        return _k0_series(x)
    return math.exp(-x) * _k0_scaled_quadrature(x)


def k0_scaled(x: float) -> float:
    """exp(x) * K0(x); safe for large x where K0 itself underflows."""
    if x <= 0.0:
        raise ValueError(f"k0_scaled requires x > 0, got {x}")
    if x <= 2.0:
        return math.exp(x) * _k0_series(x)
    return _k0_scaled_quadrature(x)


def _k0_series(x: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    harmonic = 0.0
    total = 0.0
    for k in range(1, 60):
        term *= q / (k * k)
        harmonic += 1.0 / k
        contrib = term * harmonic
        total += contrib
        if contrib < 1e-18 * max(total, 1.0):
            break
    return total - (math.log(0.5 * x) + EULER_GAMMA) * i0(x)


def _k0_scaled_quadrature(x: float) -> float:
    t2 = _HERMITE_NODES * _HERMITE_NODES
    return float(np.sum(_HERMITE_WEIGHTS / np.sqrt(t2 + 2.0 * x)))


def j0(x: float) -> float:
    """Bessel function of the first kind, order zero (real x >= 0)."""
    x = abs(x)
    if x <= 12.0:
        return _j0_series(x)
    return _h0_asymptotic(x).real


def y0(x: float) -> float:
    """Bessel function of the second kind, order zero (x > 0)."""
    if x <= 0.0:
        raise ValueError(f"y0 requires x > 0, got {x}")
    if x <= 12.0:
        return _y0_series(x)
    return _h0_asymptotic(x).imag


def h0_first_kind(x: float) -> complex:
    """Hankel function H0^(1)(x) = J0(x) + i Y0(x) for x > 0."""
    if x <= 0.0:
        raise ValueError(f"h0_first_kind requires x > 0, got {x}")
    if x <= 12.0:
        return complex(_j0_series(x), _y0_series(x))
    return _h0_asymptotic(x)


def _j0_series(x: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for k in range(1, 80):
        term *= -q / (k * k)
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-30):
            break
    return total


def _y0_series(x: float) -> float:
    q = 0.25 * x * x
    term = 1.0
    harmonic = 0.0
    total = 0.0
    for k in range(1, 80):
        term *= -q / (k * k)
        harmonic += 1.0 / k
        total -= term * harmonic  # (-1)^(k+1) pattern
        if abs(term) < 1e-18:
            break
    return (2.0 / math.pi) * ((math.log(0.5 * x) + EULER_GAMMA) * _j0_series(x) + total)


def _h0_asymptotic(x: float) -> complex:
    # One-sided Hankel expansion with optimal truncation:
    #   H0(x) ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum_k t_k,
    #   t_0 = 1, t_{k+1} = -t_k * i (2k+1)^2 / (8 x (k+1)).
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(40):
        nxt = -term * 1j * (2 * k + 1) ** 2 / (8.0 * x * (k + 1))
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17:
            break
    phase = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * complex(math.cos(phase), math.sin(phase)) * total
