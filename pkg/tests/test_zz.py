"""Perturbative ZZ rates against arithmetic and exact-diagonalization oracles."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import full_fock_zz
from xtalk import exactdiag as ed
from xtalk import zz as zzm

RNG = np.random.default_rng(17)


def sector_zz_pair(p: zzm.PairSpectrum) -> float:
    jm = np.array([[0.0, p.j], [p.j, 0.0]])
    h = ed.build_sectors([p.omega1, p.omega2], [p.alpha1, p.alpha2], jm)
    return ed.zz_exact(h, 0, 1)


class TestZZNearestNeighbor:
    def test_zero_coupling(self):
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -196.0, 0.0)
        assert zzm.zz_nn(p).zeta_mhz == 0.0

    def test_reference_pair_value(self):
        # straddling pair 92.6 MHz apart with J = 600 kHz -> +9.4 kHz
        p = zzm.PairSpectrum(4888.2, 4795.6, -196.6, -197.2, 0.6)
        val = zzm.zz_nn(p)
        assert val.zeta_mhz * 1e3 == pytest.approx(9.4, abs=0.05)
        exact = sector_zz_pair(p)
        assert val.zeta_mhz == pytest.approx(exact, rel=1e-3)
        fock = full_fock_zz([p.omega1, p.omega2], [p.alpha1, p.alpha2],
                            np.array([[0.0, p.j], [p.j, 0.0]]), 0, 1)
        assert val.zeta_mhz == pytest.approx(fock, rel=1e-3)

    def test_antisymmetric_anharmonicity_would_cancel(self):
        # numerator 2(a1+a2): equal magnitudes with opposite sign cancel;
        # transmon convention forbids positive alpha, so check the factor
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -196.0, 0.5)
        scale = zzm.zz_nn(p).zeta_mhz
        shrunk = zzm.zz_nn(replace(p, alpha1=-1e-9, alpha2=-196.0)).zeta_mhz
        assert abs(shrunk) < abs(scale)
        assert zzm.zz_nn(p).zeta_mhz * (p.alpha1 + p.alpha2) > 0 or scale < 0

    def test_pole_error_names_factor(self):
        p = zzm.PairSpectrum(4996.5, 4800.0, -196.6, -197.2, 0.5)  # D ~ -alpha1
        with pytest.raises(zzm.PoleProximityError) as err:
            zzm.zz_nn(p)
        assert err.value.factor_name == "D + alpha1"
        assert err.value.margin < 1.0

    def test_straddling_sign_from_factor_signs(self):
        # inside the straddling regime with |D| < |alpha|: (D+a1) < 0 < (D-a2),
        # numerator negative -> zeta > 0; asserted from the factors themselves
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -197.0, 0.5)
        d = p.detuning
        f1, f2 = d + p.alpha1, d - p.alpha2
        zeta = zzm.zz_nn(p).zeta_mhz
        assert p.straddling
        expected_sign = math.copysign(1.0, 2.0 * (p.alpha1 + p.alpha2) / (f1 * f2))
        assert math.copysign(1.0, zeta) == expected_sign

    def test_quadratic_scaling_exact(self):
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -197.0, 0.4)
        base = zzm.zz_nn(p).zeta_mhz
        for s in (0.5, 2.0, 3.0):
            assert zzm.zz_nn(replace(p, j=s * p.j)).zeta_mhz == pytest.approx(
                s * s * base, rel=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(w1=st.floats(4700, 5000), dw=st.floats(-150, 150),
           a1=st.floats(-205, -185), a2=st.floats(-205, -185),
           j=st.floats(0.05, 1.0))
    def test_relabeling_invariance(self, w1, dw, a1, a2, j):
        p = zzm.PairSpectrum(w1, w1 - dw, a1, a2, j)
        try:
            direct = zzm.zz_nn(p).zeta_mhz
        except zzm.PoleProximityError:
            return
        assert zzm.zz_nn(p.swapped()).zeta_mhz == pytest.approx(direct, rel=1e-13)

    def test_agreement_window_vs_exact(self):
        # dispersive straddling ensemble: J/D <= 0.05 away from poles
        count = 0
        while count < 100:
            a1 = float(RNG.uniform(-199, -193))
            a2 = float(RNG.uniform(-199, -193))
            d = float(RNG.choice([-1, 1]) * RNG.uniform(25, 185))
            ratio = float(RNG.uniform(0.01, 0.05))
            j = ratio * abs(d)
            margin = 5.0 * 196.0 * ratio
            if abs(d + a1) < margin or abs(d - a2) < margin:
                continue
            w1 = 4850.0 + 0.5 * d
            p = zzm.PairSpectrum(w1, w1 - d, a1, a2, j)
            if not p.straddling:
                continue
            count += 1
            exact = sector_zz_pair(p)
            pert = zzm.zz_nn(p).zeta_mhz
            assert abs(pert - exact) / abs(exact) < 0.05


class TestZZNextNearest:
    def test_decoupled_mediator_reduces_to_pair(self):
        t = zzm.TripletSpectrum(4810.0, 4960.0, 4890.0, -196.0, -196.0, -196.0,
                                j12=0.0, j23=0.0, j13=0.5)
        val = zzm.zz_nnn(t)
        pair = zzm.zz_nn(zzm.PairSpectrum(4810.0, 4890.0, -196.0, -196.0, 0.5))
        assert val.zeta_mhz == pytest.approx(pair.zeta_mhz, rel=1e-14)
        assert val.lam == 0.0
        assert val.asymmetry_term_mhz == 0.0 and val.lambda2_term_mhz == 0.0

    def test_degenerate_far_pair_flagged(self):
        t = zzm.TripletSpectrum(4850.0, 4950.0, 4850.0, -196.0, -196.0, -196.0,
                                j12=0.5, j23=0.5, j13=0.0)
        with pytest.raises(zzm.PoleProximityError):
            zzm.zz_nnn(t)

    def test_reference_chain_vs_exact_diag(self):
        t = zzm.TripletSpectrum(4810.0, 4960.0, 4890.0, -196.0, -196.0, -196.0,
                                j12=0.6, j23=0.6, j13=0.0)
        val = zzm.zz_nnn(t)
        jm = np.zeros((3, 3))
        jm[0, 1] = jm[1, 0] = 0.6
        jm[1, 2] = jm[2, 1] = 0.6
        h = ed.build_sectors([4810.0, 4960.0, 4890.0], [-196.0] * 3, jm)
        exact = ed.zz_exact(h, 0, 2)
        assert abs(val.zeta_mhz - exact) / abs(exact) < 0.10

    def test_limit_sweep_vanishes(self):
        # J13 = 0, detunings growing with the mediation ratio shrinking
        vals = []
        for scale in (1.0, 2.0, 4.0, 8.0):
            t = zzm.TripletSpectrum(4850.0 - 40.0 * scale, 4850.0 + 60.0 * scale,
                                    4850.0 + 140.0 * scale * 0 + 25.0,
                                    -196.0, -196.0, -196.0,
                                    j12=0.4, j23=0.4, j13=0.0)
            vals.append(abs(zzm.zz_nnn(t).zeta_mhz))
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-2 * vals[0]

    def test_decomposition_sums_to_total(self):
        t = zzm.TripletSpectrum(4820.0, 4950.0, 4880.0, -196.0, -195.0, -197.0,
                                j12=0.5, j23=0.7, j13=0.1)
        val = zzm.zz_nnn(t)
        assert val.zeta_mhz == pytest.approx(
            val.direct_term_mhz + val.asymmetry_term_mhz + val.lambda2_term_mhz,
            rel=1e-14)


LAW = zzm.ScalingLaw(j0_mhz=0.623, d0_mm=1.0, ref_spacing_mm=2.0)


class TestZZScaled:
    def test_unnormalized_envelope_reaches_pair_limit(self):
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -196.0)
        law = zzm.ScalingLaw(j0_mhz=0.5, d0_mm=1.3, ref_spacing_mm=2.0)
        tiny = zzm.zz_scaled(p, 1e-9, law, normalize_at_nn=False).zeta_mhz
        base = zzm.zz_nn(replace(p, j=0.5)).zeta_mhz
        assert tiny == pytest.approx(base, rel=1e-6)

    def test_envelope_value_at_decay_length(self):
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -196.0)
        law = zzm.ScalingLaw(j0_mhz=0.5, d0_mm=1.3, ref_spacing_mm=0.0)
        at_d0 = zzm.zz_scaled(p, 1.3, law, normalize_at_nn=False).zeta_mhz
        base = zzm.zz_nn(replace(p, j=0.5)).zeta_mhz
        assert at_d0 / base == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_nearest_neighbor_normalization_passes_through(self):
        p = zzm.PairSpectrum(4850.0, 4800.0, -196.0, -196.0)
        law = zzm.ScalingLaw(j0_mhz=0.5, d0_mm=1.3, ref_spacing_mm=2.0)
        nn = zzm.zz_scaled(p, 2.0, law, normalize_at_nn=True).zeta_mhz
        assert nn == pytest.approx(zzm.zz_nn(replace(p, j=0.5)).zeta_mhz, rel=1e-12)

    def test_dispersion_factor_applied(self):
        law = zzm.ScalingLaw(j0_mhz=0.5, d0_mm=1.3, ref_spacing_mm=2.0,
                             freq_ref_mhz=4850.0)
        p = zzm.PairSpectrum(4900.0, 4800.0, -196.0, -196.0)
        got = zzm.zz_scaled(p, 2.0, law).zeta_mhz
        j_eff = 0.5 * math.sqrt(4900.0 * 4800.0) / 4850.0
        want = zzm.zz_nn(replace(p, j=j_eff)).zeta_mhz
        assert got == pytest.approx(want, rel=1e-12)


class TestJUnified:
    def test_envelope_ratio(self):
        law = zzm.ScalingLaw(j0_mhz=0.623, d0_mm=1.1)
        from xtalk.special import k0
        ratio = zzm.j_unified(4850, 4850, 4.0, law) / zzm.j_unified(4850, 4850, 2.0, law)
        assert ratio == pytest.approx(k0(4.0 / 1.1) / k0(2.0 / 1.1), rel=1e-13)

    def test_asymptotic_form(self):
        law = zzm.ScalingLaw(j0_mhz=1.0, d0_mm=1.0)
        for kd in (20.0, 40.0):
            j = zzm.j_unified(4850, 4850, kd, law)
            asym = math.sqrt(math.pi / (2 * kd)) * math.exp(-kd)
            assert j == pytest.approx(asym, rel=0.01)

    def test_frequency_correction_hook(self):
        law = zzm.ScalingLaw(j0_mhz=1.0, d0_mm=1.0,
                             freq_correction=lambda dw: 1.0 / (1.0 + dw / 1000.0))
        assert zzm.j_unified(4900, 4800, 2.0, law) == pytest.approx(
            zzm.j_unified(4850, 4850, 2.0, law) / 1.1, rel=1e-12)


class TestSpectatorError:
    def test_uncoupled_spectator(self):
        t = zzm.TripletSpectrum(4850.0, 4800.0, 4900.0, -196.0, -196.0, -196.0,
                                j12=0.6, j23=0.5, j13=0.0)
        est = zzm.spectator_error(t)
        assert est.delta_zeta_mhz == 0.0 and est.relative == 0.0

    def test_typical_parameters_negligible(self):
        # far pair coupling well below the pair coupling, all J << D
        t = zzm.TripletSpectrum(4850.0, 4800.0, 4900.0, -196.0, -196.0, -196.0,
                                j12=0.6, j23=0.6, j13=0.05)
        est = zzm.spectator_error(t)
        assert est.relative < 0.05

    def test_linear_in_far_coupling(self):
        t = zzm.TripletSpectrum(4850.0, 4800.0, 4900.0, -196.0, -196.0, -196.0,
                                j12=0.6, j23=0.6, j13=0.05)
        doubled = zzm.TripletSpectrum(4850.0, 4800.0, 4900.0, -196.0, -196.0,
                                      -196.0, j12=0.6, j23=0.6, j13=0.10)
        assert zzm.spectator_error(doubled).delta_zeta_mhz == pytest.approx(
            2.0 * zzm.spectator_error(t).delta_zeta_mhz, rel=1e-14)

    def test_relative_form_consistent(self):
        t = zzm.TripletSpectrum(4850.0, 4800.0, 4900.0, -196.0, -196.0, -196.0,
                                j12=0.6, j23=0.6, j13=0.05)
        est = zzm.spectator_error(t)
        zeta = zzm.zz_nn(zzm.PairSpectrum(4850.0, 4800.0, -196.0, -196.0, 0.6))
        assert abs(est.delta_zeta_mhz / zeta.zeta_mhz) == pytest.approx(
            est.relative, rel=1e-12)
