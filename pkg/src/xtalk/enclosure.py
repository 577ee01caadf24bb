"""Pillar-shunted enclosure model: mode spectrum, screening, and coupling.

A periodic array of inductive shunt posts (spacing ``a``, coupling ratio
``beta`` = shunt inductance over post inductance) turns the enclosure into
a plasma-like medium.  The discrete LC lattice has mode frequencies

    w_ij = w0 / sqrt(1 + 2 beta (cos(i pi/n) + cos(j pi/m))),  i, j >= 0,

whose minimum - the uniform i = j = 0 mode - is the cutoff
w_c = w0 / sqrt(1 + 4 beta).  Below w_c fields are evanescent with
screening rate kappa(w) = sqrt(w_c^2 - w^2) / v and the in-plane Green's
function is K0(kappa R) / (2 pi); above it, propagating,
(i/4) H0^(1)(q R) with q = sqrt(w^2 - w_c^2) / v.

The effective velocity follows from the near-cutoff dispersion of the
circuit lattice: v = w0 a / (2 sqrt(beta)) = w_c a sqrt((1+4 beta)/(4 beta)),
which reproduces the near-cutoff bound-state length
delta_b ~ a sqrt((1+4 beta)/(4 beta)) / sqrt(2 (w_c - w)/w_c).

Units: frequencies MHz, lengths mm, kappa 1/mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import h0_first_kind, k0

__all__ = [
    "EnclosureSpec",
    "ScreeningParams",
    "AboveCutoffError",
    "BelowCutoffError",
    "EnclosureParameterError",
    "mode_frequencies",
    "kappa",
    "kappa_derivative",
    "k0",
    "hankel_green",
    "enclosure_coupling",
    "spatial_envelope",
    "coupling_from_transimpedance",
    "ENVELOPE_REGIMES",
]

ENVELOPE_REGIMES = ("near-field", "fringing", "dipolar", "below-cutoff")


class EnclosureParameterError(ValueError):
    pass


class AboveCutoffError(ValueError):
    """Frequency at or above cutoff: use the propagating (Hankel) branch."""


class BelowCutoffError(ValueError):
    """Frequency at or below cutoff: use the evanescent (K0) branch."""


@dataclass(frozen=True)
class EnclosureSpec:
    """Pillar lattice parameters.

    pitch_mm     post spacing a
    beta         L_shunt / L_post ratio (>= 0)
    omega0_mhz   isolated-cell resonance 1/sqrt(L0 C0)
    n, m         optional default grid for mode enumeration
    boundary_l_ratio   boundary inductance ratio; the spectrum below assumes
                       an open boundary (0.0) and other values are carried
                       for callers that model loaded edges themselves
    """

    pitch_mm: float
    beta: float
    omega0_mhz: float
    n: int | None = None
    m: int | None = None
    boundary_l_ratio: float = 0.0

    def __post_init__(self):
        if self.pitch_mm <= 0:
            raise EnclosureParameterError(f"pitch must be positive, got {self.pitch_mm}")
        if self.beta < 0:
            raise EnclosureParameterError(f"beta must be >= 0, got {self.beta}")
        if self.omega0_mhz <= 0:
            raise EnclosureParameterError("omega0 must be positive")

    @property
    def cutoff_mhz(self) -> float:
        return self.omega0_mhz / math.sqrt(1.0 + 4.0 * self.beta)

    @property
    def velocity_mm_mhz(self) -> float:
        """Effective phase velocity w0 a / (2 sqrt(beta)); requires beta > 0."""
        if self.beta == 0.0:
            raise EnclosureParameterError("velocity undefined at beta = 0 (flat band)")
        return self.omega0_mhz * self.pitch_mm / (2.0 * math.sqrt(self.beta))


@dataclass(frozen=True)
class ScreeningParams:
    """Evanescent screening at one frequency below cutoff."""

    omega_mhz: float
    kappa_per_mm: float
    delta_b_mm: float
    delta_b_circuit_mm: float   # near-cutoff circuit form; agrees as w -> w_c
    diverging: bool             # kappa ~ 0: bound-state length effectively infinite


def mode_frequencies(spec: EnclosureSpec, n: int | None = None,
                     m: int | None = None) -> np.ndarray:
    """Ascending mode frequencies of the n x m shunted lattice.

    Indices run from 0 (the uniform mode, exactly at the cutoff) to n-1 and
    m-1.  For beta > 1/4 the high-index corner of large grids drives the
    radicand nonpositive, where the nearest-neighbor lattice model has no
    real mode; such grids are rejected rather than silently truncated.
    """
    n = spec.n if n is None else n
    m = spec.m if m is None else m
    if not n or not m or n < 1 or m < 1:
        raise EnclosureParameterError("grid counts n, m must be >= 1")
    ci = np.cos(np.arange(n) * math.pi / n)
    cj = np.cos(np.arange(m) * math.pi / m)
    radicand = 1.0 + 2.0 * spec.beta * (ci[:, None] + cj[None, :])
    if np.any(radicand <= 0.0):
        bad = np.argwhere(radicand <= 0.0)[0]
        raise EnclosureParameterError(
            f"nonpositive dispersion radicand at mode index {tuple(bad)}: "
            f"beta={spec.beta} too large for a {n}x{m} grid")
    freqs = spec.omega0_mhz / np.sqrt(radicand)
    return np.sort(freqs.ravel())


def kappa(spec: EnclosureSpec, omega_mhz: float) -> ScreeningParams:
    """Screening rate and bound-state length at a frequency below cutoff.

    Also evaluates the near-cutoff circuit form
    a sqrt((1+4b)/(4b)) / sqrt(2 (w_c - w)/w_c); the two agree in the
    near-cutoff expansion regime and drift apart for w << w_c.
    """
    wc = spec.cutoff_mhz
    if omega_mhz < 0:
        raise ValueError("frequency must be nonnegative")
    if omega_mhz >= wc:
        raise AboveCutoffError(
            f"{omega_mhz} MHz is at/above the cutoff {wc:.6g} MHz; "
            "use hankel_green for the propagating regime")
    v = spec.velocity_mm_mhz
    kap = math.sqrt(wc * wc - omega_mhz * omega_mhz) / v
    circuit = (spec.pitch_mm
               * math.sqrt((1.0 + 4.0 * spec.beta) / (4.0 * spec.beta))
               / math.sqrt(2.0 * (wc - omega_mhz) / wc))
    # within a part in 1e12 of the cutoff the gap is below double-precision
    # resolution and the bound-state length is effectively infinite
    diverging = (wc - omega_mhz) < 1e-12 * wc
    delta_b = math.inf if diverging else 1.0 / kap
    return ScreeningParams(omega_mhz=omega_mhz, kappa_per_mm=kap,
                           delta_b_mm=delta_b, delta_b_circuit_mm=circuit,
                           diverging=diverging)


def kappa_derivative(spec: EnclosureSpec, omega_mhz: float) -> float:
    """d kappa / d omega = -w / (v sqrt(w_c^2 - w^2)), negative below cutoff."""
    wc = spec.cutoff_mhz
    if not 0 <= omega_mhz < wc:
        raise AboveCutoffError("kappa'(w) defined below cutoff only")
    return -omega_mhz / (spec.velocity_mm_mhz * math.sqrt(wc * wc - omega_mhz ** 2))


def hankel_green(spec: EnclosureSpec, omega_mhz: float, r_mm: float) -> complex:
    """Above-cutoff in-plane Green's function (i/4) H0^(1)(q R).

    Oscillatory with a 1/sqrt(R) envelope; q = sqrt(w^2 - w_c^2)/v.
    """
    wc = spec.cutoff_mhz
    if omega_mhz <= wc:
        raise BelowCutoffError(
            f"{omega_mhz} MHz is at/below cutoff {wc:.6g} MHz; use the k0 branch")
    if r_mm <= 0:
        raise ValueError("separation must be positive")
    q = math.sqrt(omega_mhz ** 2 - wc * wc) / spec.velocity_mm_mhz
    return 0.25j * h0_first_kind(q * r_mm)


def enclosure_coupling(spec: EnclosureSpec, omega_i_mhz: float, omega_j_mhz: float,
                       d_mm: float, j0_env_mhz: float) -> float:
    """Enclosure-mediated exchange between two below-cutoff modes.

        J = J0_env * K0(kbar d) * cosh(|kappa'(wbar)| |wi - wj| d / 2)

    kbar is the screening rate at the mean frequency.  J0_env calibrates
    the overall scale (geometric overlap factors absorbed); with equal
    frequencies at a reference spacing d0 the result is exactly
    J0_env * K0(kbar d0).
    """
    if d_mm <= 0:
        raise ValueError("separation must be positive")
    wbar = 0.5 * (omega_i_mhz + omega_j_mhz)
    scr = kappa(spec, wbar)        # raises AboveCutoffError past the cutoff
    for w in (omega_i_mhz, omega_j_mhz):
        if w >= spec.cutoff_mhz:
            raise AboveCutoffError(f"{w} MHz is above the cutoff")
    slope = abs(kappa_derivative(spec, wbar))
    detuning_factor = math.cosh(0.5 * slope * abs(omega_i_mhz - omega_j_mhz) * d_mm)
    return j0_env_mhz * k0(scr.kappa_per_mm * d_mm) * detuning_factor


def spatial_envelope(regime: str, d_mm: float, d0_mm: float,
                     electrode_width_mm: float | None = None,
                     kappa_bar_per_mm: float | None = None) -> float:
    """Dimensionless spatial falloff, normalized to 1 at the reference d0.

    near-field:   d0/d
    fringing:     ln(2 d0/w) / ln(2 d/w)   (needs d > w/2)
    dipolar:      (d0/d)^3
    below-cutoff: K0(kbar d) / K0(kbar d0)
    """
    if d_mm <= 0 or d0_mm <= 0:
        raise ValueError("separations must be positive")
    if regime == "near-field":
        return d0_mm / d_mm
    if regime == "fringing":
        if electrode_width_mm is None or electrode_width_mm <= 0:
            raise ValueError("fringing regime needs a positive electrode width")
        if d_mm <= 0.5 * electrode_width_mm or d0_mm <= 0.5 * electrode_width_mm:
            raise ValueError(
                f"fringing log undefined: separation must exceed w/2 = "
                f"{0.5 * electrode_width_mm}")
        return math.log(2.0 * d0_mm / electrode_width_mm) / math.log(2.0 * d_mm / electrode_width_mm)
    if regime == "dipolar":
        return (d0_mm / d_mm) ** 3
    if regime == "below-cutoff":
        if kappa_bar_per_mm is None or kappa_bar_per_mm <= 0:
            raise ValueError("below-cutoff regime needs a positive kappa")
        return k0(kappa_bar_per_mm * d_mm) / k0(kappa_bar_per_mm * d0_mm)
    raise ValueError(f"unknown regime {regime!r}; expected one of {ENVELOPE_REGIMES}")


def coupling_from_transimpedance(omega_i_mhz: float, omega_j_mhz: float,
                                 l_i: float, l_j: float,
                                 z_at_i: complex, z_at_j: complex) -> float:
    """Exchange rate from the two-port transimpedance evaluated at both modes:

        J = -(1/4) sqrt(wi wj / (Li Lj)) Im[ Z(wi)/wi + Z(wj)/wj ].

    Only the reactive part couples; a purely real transimpedance gives 0.
    """
    if l_i <= 0 or l_j <= 0:
        raise ValueError("inductances must be positive")
    if omega_i_mhz <= 0 or omega_j_mhz <= 0:
        raise ValueError("frequencies must be positive")
    reactive = (z_at_i / omega_i_mhz + z_at_j / omega_j_mhz).imag
    return -0.25 * math.sqrt(omega_i_mhz * omega_j_mhz / (l_i * l_j)) * reactive
