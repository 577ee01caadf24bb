"""Perturbative static ZZ rates and the distance-scaled coupling model.

The static ZZ rate is the state-dependent frequency shift
zeta = E(11) - E(10) - E(01) + E(00).  For a directly coupled pair with
detuning D = w1 - w2 and (negative) anharmonicities a1, a2,

    zeta = 2 (a1 + a2) J^2 / [(D + a1)(D - a2)],

valid away from the straddling-regime poles at D = -a1 and D = a2.  The
three-transmon expression for a far pair (1, 3) mediated by 2 keeps the
mediated effective coupling J'_13 = J_13 + Lam (D12 - D23) with
Lam = -J12 J23 / (2 D12 D23), plus asymmetry and Lam^2 corrections.

The distance-scaled model multiplies the pair expression by an exponential
envelope exp(-2 d / d0) (optionally re-referenced to the nearest-neighbor
spacing so that designed neighbors are left unscaled), with the pair
coupling carrying the sqrt(wi wj) circuit dispersion.

The spectator estimate keeps Lam' = +J13 J23 / (2 D13 D23) with the sign
written in its own derivation; it is intentionally not harmonized with the
sign of Lam above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

from .special import k0

__all__ = [
    "PairSpectrum",
    "TripletSpectrum",
    "ScalingLaw",
    "PoleProximityError",
    "ZZValue",
    "ZZTripletValue",
    "SpectatorEstimate",
    "zz_nn",
    "zz_nnn",
    "zz_scaled",
    "j_unified",
    "spectator_error",
    "DEFAULT_POLE_TOL_MHZ",
]

DEFAULT_POLE_TOL_MHZ = 1.0  # ~0.5% of a typical |alpha|


class PoleProximityError(ValueError):
    """A perturbative denominator sits within the pole tolerance.

    Physically: the pair operates at the edge of the straddling regime,
    near a higher-level transition; the perturbative formula is unreliable
    there and such pairs are treated as outliers upstream.
    """

    def __init__(self, message, factor_name=None, margin=None):
        super().__init__(message)
        self.factor_name = factor_name
        self.margin = margin


@dataclass(frozen=True)
class PairSpectrum:
    """Two directly coupled transmons; frequencies/anharmonicities in MHz."""

    omega1: float
    omega2: float
    alpha1: float
    alpha2: float
    j: float = 0.0

    def __post_init__(self):
        if self.alpha1 >= 0 or self.alpha2 >= 0:
            raise ValueError("transmon anharmonicities must be negative")

    @property
    def detuning(self) -> float:
        return self.omega1 - self.omega2

    @property
    def straddling(self) -> bool:
        return abs(self.detuning) < min(abs(self.alpha1), abs(self.alpha2))

    def swapped(self) -> "PairSpectrum":
        return PairSpectrum(self.omega2, self.omega1, self.alpha2, self.alpha1, self.j)


@dataclass(frozen=True)
class TripletSpectrum:
    """Three transmons with all pairwise couplings.

    For the far-pair rate, (1, 3) is the pair and 2 the mediator; for the
    spectator estimate, (1, 2) is the pair and 3 the ground-state spectator.
    """

    omega1: float
    omega2: float
    omega3: float
    alpha1: float
    alpha2: float
    alpha3: float
    j12: float
    j23: float
    j13: float = 0.0

    def __post_init__(self):
        if self.alpha1 >= 0 or self.alpha2 >= 0 or self.alpha3 >= 0:
            raise ValueError("transmon anharmonicities must be negative")

    @property
    def d12(self) -> float:
        return self.omega1 - self.omega2

    @property
    def d23(self) -> float:
        return self.omega2 - self.omega3

    @property
    def d13(self) -> float:
        return self.omega1 - self.omega3

    @property
    def lam(self) -> float:
        """Mediation parameter -J12 J23 / (2 D12 D23) for the (1,3) pair."""
        if self.d12 == 0.0 or self.d23 == 0.0:
            raise PoleProximityError("mediator degenerate with a pair member",
                                     factor_name="D12*D23", margin=0.0)
        return -self.j12 * self.j23 / (2.0 * self.d12 * self.d23)

    @property
    def j13_effective(self) -> float:
        """J'_13 = J13 + Lam (D12 - D23)."""
        return self.j13 + self.lam * (self.d12 - self.d23)


class ZZValue(NamedTuple):
    zeta_mhz: float
    pole_margin_mhz: float


class ZZTripletValue(NamedTuple):
    zeta_mhz: float
    direct_term_mhz: float       # (J'_13 - Lam (a1+a3)/2)^2 contribution
    asymmetry_term_mhz: float    # (a1 - a3) cross term
    lambda2_term_mhz: float      # Lam^2 contribution
    lam: float
    j13_effective_mhz: float


class SpectatorEstimate(NamedTuple):
    delta_zeta_mhz: float
    relative: float


@dataclass(frozen=True)
class ScalingLaw:
    """Distance/frequency scaling of pairwise coupling.

    j0_mhz          coupling scale at the reference spacing
    d0_mm           characteristic decay length (kappa = 1/d0)
    ref_spacing_mm  nearest-neighbor spacing used to re-reference envelopes
    freq_ref_mhz    frequency at which j0 was calibrated; enables the
                    sqrt(wi wj)/freq_ref dispersion factor (None disables it)
    freq_correction optional extra factor f(|wi - wj|), default 1
    """

    j0_mhz: float
    d0_mm: float
    ref_spacing_mm: float = 0.0
    freq_ref_mhz: float | None = None
    freq_correction: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.j0_mhz < 0:
            raise ValueError("j0 must be nonnegative")
        if self.d0_mm <= 0:
            raise ValueError("decay length must be positive")

    def dispersion_factor(self, omega_i: float, omega_j: float) -> float:
        if self.freq_ref_mhz is None:
            return 1.0
        return math.sqrt(omega_i * omega_j) / self.freq_ref_mhz

    def frequency_factor(self, delta_omega: float) -> float:
        if self.freq_correction is None:
            return 1.0
        return self.freq_correction(abs(delta_omega))


def _check_pole(name: str, value: float, tol: float) -> float:
    if abs(value) < tol:
        raise PoleProximityError(
            f"denominator factor {name} = {value:.6g} MHz is inside the pole "
            f"tolerance {tol:g} MHz (straddling-regime edge)",
            factor_name=name, margin=abs(value))
    return abs(value)


def zz_nn(p: PairSpectrum, pole_tol_mhz: float = DEFAULT_POLE_TOL_MHZ) -> ZZValue:
    """Nearest-neighbor ZZ rate 2 (a1+a2) J^2 / [(D+a1)(D-a2)], in MHz.

    Also returns the smaller of the two pole margins.  Note the result is
    negative through most of the straddling regime, where the two factors
    have opposite signs.
    """
    d = p.detuning
    m1 = _check_pole("D + alpha1", d + p.alpha1, pole_tol_mhz)
    m2 = _check_pole("D - alpha2", d - p.alpha2, pole_tol_mhz)
    zeta = 2.0 * (p.alpha1 + p.alpha2) * p.j ** 2 / ((d + p.alpha1) * (d - p.alpha2))
    return ZZValue(zeta_mhz=zeta, pole_margin_mhz=min(m1, m2))


def zz_nnn(t: TripletSpectrum, pole_tol_mhz: float = DEFAULT_POLE_TOL_MHZ) -> ZZTripletValue:
    """ZZ rate of the far pair (1, 3) with mediator 2, in MHz.

    Evaluates the mediated expression term by term and returns the
    decomposition alongside the total.
    """
    d13, d12, d23 = t.d13, t.d12, t.d23
    _check_pole("D12", d12, pole_tol_mhz)
    _check_pole("D23", d23, pole_tol_mhz)
    _check_pole("D13 + alpha1", d13 + t.alpha1, pole_tol_mhz)
    _check_pole("D13 - alpha3", d13 - t.alpha3, pole_tol_mhz)
    _check_pole("D12 - D23 - alpha2", d12 - d23 - t.alpha2, pole_tol_mhz)

    lam = t.lam
    j_eff = t.j13_effective
    asum = t.alpha1 + t.alpha3
    denom = (d13 + t.alpha1) * (d13 - t.alpha3)

    direct = 2.0 * asum / denom * (j_eff - lam * 0.5 * asum) ** 2
    asym = 4.0 * (t.alpha1 - t.alpha3) / denom * (d13 + 0.5 * asum) * lam * j_eff
    lam2 = (2.0 * (d13 ** 2 - (0.5 * asum) ** 2) / denom * asum
            + 8.0 * (d12 - d23) / (d12 - d23 - t.alpha2) * t.alpha2) * lam ** 2
    return ZZTripletValue(zeta_mhz=direct + asym + lam2,
                          direct_term_mhz=direct, asymmetry_term_mhz=asym,
                          lambda2_term_mhz=lam2, lam=lam, j13_effective_mhz=j_eff)


def zz_scaled(p: PairSpectrum, d_mm: float, law: ScalingLaw,
              normalize_at_nn: bool = True,
              pole_tol_mhz: float = DEFAULT_POLE_TOL_MHZ) -> ZZValue:
    """Distance-scaled pair ZZ: the pair expression times exp(-2 d / d0).

    The pair coupling comes from the law (j0 times the sqrt(wi wj)
    dispersion factor), not from ``p.j``.  With ``normalize_at_nn`` the
    envelope is exp(-2 (d - a)/d0), leaving designed nearest neighbors at
    spacing a unscaled; without it the bare exp(-2 d/d0) is used, which
    tends to the plain pair expression as d -> 0.
    """
    if d_mm <= 0:
        raise ValueError("separation must be positive")
    j_pair = law.j0_mhz * law.dispersion_factor(p.omega1, p.omega2)
    j_pair *= law.frequency_factor(p.omega1 - p.omega2)
    base = zz_nn(replace(p, j=j_pair), pole_tol_mhz=pole_tol_mhz)
    offset = law.ref_spacing_mm if normalize_at_nn else 0.0
    envelope = math.exp(-2.0 * (d_mm - offset) / law.d0_mm)
    return ZZValue(zeta_mhz=base.zeta_mhz * envelope,
                   pole_margin_mhz=base.pole_margin_mhz)


def j_unified(omega_i: float, omega_j: float, d_mm: float, law: ScalingLaw) -> float:
    """Pairwise coupling J0 K0(d/d0) f(|wi - wj|), in MHz.

    The frequency factor defaults to 1, which is the weak-dispersion limit
    appropriate when detunings are small against the cutoff.
    """
    if d_mm <= 0:
        raise ValueError("separation must be positive")
    return (law.j0_mhz * k0(d_mm / law.d0_mm)
            * law.frequency_factor(omega_i - omega_j))


def spectator_error(t: TripletSpectrum,
                    pole_tol_mhz: float = DEFAULT_POLE_TOL_MHZ) -> SpectatorEstimate:
    """Shift of the (1, 2) pair rate caused by ground-state spectator 3.

        dzeta = [2 (a1+a2) / ((D12+a1)(D12-a2))] J12
                * [2 (D12 + D23) - (a1 + a2)] * Lam',
        Lam'  = J13 J23 / (2 D13 D23),

    with the relative form |dzeta / zeta| = |[2(D12+D23) - (a1+a2)] Lam' / J12|.
    """
    d12, d23, d13 = t.d12, t.d23, t.d13
    _check_pole("D12 + alpha1", d12 + t.alpha1, pole_tol_mhz)
    _check_pole("D12 - alpha2", d12 - t.alpha2, pole_tol_mhz)
    _check_pole("D13", d13, pole_tol_mhz)
    _check_pole("D23", d23, pole_tol_mhz)
    lam_p = t.j13 * t.j23 / (2.0 * d13 * d23)
    bracket = 2.0 * (d12 + d23) - (t.alpha1 + t.alpha2)
    prefactor = 2.0 * (t.alpha1 + t.alpha2) / ((d12 + t.alpha1) * (d12 - t.alpha2))
    delta = prefactor * t.j12 * bracket * lam_p
    if t.j12 == 0.0:
        return SpectatorEstimate(delta_zeta_mhz=delta, relative=math.inf if delta else 0.0)
    relative = abs(bracket * lam_p / t.j12)
    return SpectatorEstimate(delta_zeta_mhz=delta, relative=relative)
