"""Mediator-chain coupling: product estimate vs exact elimination."""

import numpy as np
import pytest

from xtalk import mediator as md

RNG = np.random.default_rng(3)


def chain(m, g=50.0, delta=1000.0, w1=4800.0, w2=4900.0, above=True):
    wbar = 0.5 * (w1 + w2)
    wc = wbar + delta if above else wbar - delta
    return md.MediatorChain(w1, w2, tuple(wc for _ in range(m)),
                            tuple(g for _ in range(m + 1)))


class TestProduct:
    def test_single_mediator_value(self):
        c = md.MediatorChain(4800.0, 4800.0, (5800.0,), (50.0, 50.0))
        assert md.jeff_product(c).value == pytest.approx(2.5, rel=1e-14)

    def test_two_mediators_value(self):
        c = md.MediatorChain(4800.0, 4800.0, (5800.0, 5800.0), (50.0, 50.0, 50.0))
        assert md.jeff_product(c).value == pytest.approx(0.125, rel=1e-14)

    def test_zero_link_gives_zero(self):
        c = md.MediatorChain(4800.0, 4800.0, (5800.0, 5800.0), (50.0, 0.0, 50.0))
        assert md.jeff_product(c).value == 0.0

    def test_geometric_mean_form_matches(self):
        c = md.MediatorChain(4800.0, 4900.0, (34000.0, 36000.0), (55.0, 40.0, 70.0))
        est = md.jeff_product(c)
        m = c.m
        assert est.g_mean * (est.g_mean / est.delta_mean) ** m == pytest.approx(
            abs(est.value), rel=1e-12)

    def test_scaling_in_links(self):
        c = chain(3)
        base = md.jeff_product(c).value
        for s in (0.5, 2.0, 3.0):
            scaled = md.MediatorChain(c.omega1, c.omega2, c.mediators,
                                      tuple(s * g for g in c.links))
            assert md.jeff_product(scaled).value == pytest.approx(
                s ** 4 * base, rel=1e-13)

    def test_suppression_monotone_in_detuning(self):
        vals = []
        for delta in (500.0, 1000.0, 2000.0, 4000.0):
            vals.append(abs(md.jeff_product(chain(2, delta=delta)).value))
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_resonant_mediator_raises(self):
        c = md.MediatorChain(4800.0, 4900.0, (4850.0,), (50.0, 50.0))
        with pytest.raises(md.ResonanceError):
            md.jeff_product(c)


class TestSingleExact:
    def test_arithmetic_example(self):
        c = md.MediatorChain(4800.0, 4900.0, (34000.0,), (50.0, 50.0))
        expected = 1250.0 * (1.0 / -29200.0 + 1.0 / -29100.0)
        assert md.jeff_single_exact(c) == pytest.approx(expected, rel=1e-14)
        assert md.jeff_single_exact(c) == pytest.approx(-0.0858, abs=2e-4)

    def test_symmetric_limit(self):
        c = md.MediatorChain(4800.0, 4800.0, (34000.0,), (50.0, 50.0))
        assert md.jeff_single_exact(c) == pytest.approx(
            50.0 * 50.0 / (4800.0 - 34000.0), rel=1e-14)

    def test_end_swap_invariance(self):
        c = md.MediatorChain(4800.0, 4900.0, (34000.0,), (50.0, 40.0))
        assert md.jeff_single_exact(c) == pytest.approx(
            md.jeff_single_exact(c.reversed()), rel=1e-14)


class TestChainExact:
    def test_m1_reduces_to_single_exact(self):
        for _ in range(40):
            c = md.MediatorChain(
                float(RNG.uniform(4500, 5000)), float(RNG.uniform(4500, 5000)),
                (float(RNG.uniform(30000, 40000)),),
                (float(RNG.uniform(10, 80)), float(RNG.uniform(10, 80))))
            assert md.jeff_chain_exact(c) == pytest.approx(
                md.jeff_single_exact(c), rel=1e-10)

    def test_m3_matches_product_within_dispersive_window(self):
        ratio = 0.05
        c = chain(3, g=50.0, delta=50.0 / ratio, w1=4850.0, w2=4850.0)
        exact = md.jeff_chain_exact(c)
        prod = md.jeff_product(c).value
        assert abs(abs(exact) - abs(prod)) / abs(exact) <= 3.0 * ratio ** 2

    def test_disconnected_chain(self):
        c = md.MediatorChain(4800.0, 4900.0, (34000.0, 36000.0), (50.0, 0.0, 30.0))
        assert md.jeff_chain_exact(c) == 0.0

    def test_m0_direct_link(self):
        c = md.MediatorChain(4800.0, 4900.0, (), (17.0,))
        assert md.jeff_chain_exact(c) == 17.0

    def test_reciprocity(self):
        c = md.MediatorChain(4800.0, 4900.0, (34000.0, 35000.0, 36000.0),
                             (50.0, 40.0, 30.0, 20.0))
        assert md.jeff_chain_exact(c) == pytest.approx(
            md.jeff_chain_exact(c.reversed()), rel=1e-13)

    def test_convergence_monotone_over_sweep(self):
        for m in (1, 2, 3):
            gaps = []
            for ratio in (0.2, 0.1, 0.05, 0.025):
                c = chain(m, g=50.0, delta=50.0 / ratio)
                exact = md.jeff_chain_exact(c)
                prod = md.jeff_product(c).value
                gaps.append(abs(abs(exact) - abs(prod)) / abs(exact))
            assert all(a > b for a, b in zip(gaps, gaps[1:]))
            assert gaps[-1] < 0.01

    def test_probe_resonance_names_mediator(self):
        c = md.MediatorChain(4800.0, 4900.0, (4850.0,), (50.0, 40.0))
        with pytest.raises(md.ResonanceError) as err:
            md.jeff_chain_exact(c, probe=4850.0)
        assert err.value.mediator_index == 0

    def test_explicit_probe_value(self):
        # single mediator at probe E: g1 g2 / (E - wc)
        c = md.MediatorChain(4800.0, 4900.0, (34000.0,), (50.0, 40.0))
        assert md.jeff_chain_exact(c, probe=4850.0) == pytest.approx(
            50.0 * 40.0 / (4850.0 - 34000.0), rel=1e-13)


class TestChainValidation:
    def test_link_count_enforced(self):
        with pytest.raises(ValueError):
            md.MediatorChain(4800.0, 4900.0, (34000.0,), (50.0,))

    def test_positive_frequencies_enforced(self):
        with pytest.raises(ValueError):
            md.MediatorChain(-4800.0, 4900.0, (34000.0,), (50.0, 50.0))

    def test_dispersive_ratios_reported(self):
        c = chain(2, g=50.0, delta=1000.0)
        np.testing.assert_allclose(c.dispersive_ratios, [0.05, 0.05])
