"""Sector diagonalization against a truncated full-Fock oracle."""

import numpy as np
import pytest

from _oracles import full_fock_hamiltonian, full_fock_zz, embed, ladder
from xtalk import exactdiag as ed

RNG = np.random.default_rng(5)


def random_lattice(n, j_scale=0.6, coupled=0.7):
    omega = 4800.0 + RNG.uniform(-90.0, 110.0, n)
    alpha = -196.0 + RNG.uniform(-2.0, 2.0, n)
    j = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            if RNG.uniform() < coupled:
                j[i, k] = j[k, i] = RNG.uniform(0.2, j_scale)
    return omega, alpha, j


class TestBuildSectors:
    def test_sector_dimensions(self):
        omega, alpha, j = random_lattice(16)
        h = ed.build_sectors(omega, alpha, j)
        assert h.h1.shape == (16, 16)
        assert h.h2.shape == (136, 136)

    def test_uncoupled_sector2_eigenvalues(self):
        w = [4888.2, 4795.6]
        a = [-196.6, -197.2]
        h = ed.build_sectors(w, a, np.zeros((2, 2)))
        expected = sorted([2 * w[0] + a[0], 2 * w[1] + a[1], w[0] + w[1]])
        np.testing.assert_allclose(sorted(np.linalg.eigvalsh(h.h2)), expected,
                                   rtol=1e-14)

    def test_bosonic_sqrt2_element(self):
        j = np.array([[0.0, 0.37], [0.37, 0.0]])
        h = ed.build_sectors([4800.0, 4900.0], [-196.0, -196.0], j)
        pair = h.sector2_index(("pair", 0, 1))
        dbl = h.sector2_index(("double", 0))
        assert h.h2[dbl, pair] == pytest.approx(np.sqrt(2.0) * 0.37, rel=1e-15)

    def test_rejects_asymmetric_couplings(self):
        j = np.array([[0.0, 0.3], [0.2, 0.0]])
        with pytest.raises(ValueError):
            ed.build_sectors([4800.0, 4900.0], [-196.0, -196.0], j)

    def test_excitation_sectors_are_decoupled_in_full_fock(self):
        # the model conserves total excitation number: cross-sector blocks
        # of the full-Fock matrix vanish identically
        omega, alpha, j = random_lattice(3)
        levels = 4
        h = full_fock_hamiltonian(omega, alpha, j, levels)
        number = sum(embed(ladder(levels) @ ladder(levels).T, k, 3, levels)
                     for k in range(3))
        comm = h @ number - number @ h
        assert np.max(np.abs(comm)) == 0.0

    def test_sector_matrices_match_full_fock_blocks(self):
        omega, alpha, j = random_lattice(3)
        h = ed.build_sectors(omega, alpha, j)
        hf = full_fock_hamiltonian(omega, alpha, j, levels=3)
        # single-excitation block of the Fock matrix in basis |1_k>
        idx1 = [9 * (k == 0) + 3 * (k == 1) + (k == 2) for k in range(3)]
        block1 = hf[np.ix_(idx1, idx1)]
        np.testing.assert_allclose(block1, h.h1, atol=1e-12)


class TestZZExact:
    def test_zero_coupling_gives_floor_level_zero(self):
        h = ed.build_sectors([4888.2, 4795.6], [-196.6, -197.2], np.zeros((2, 2)))
        assert abs(ed.zz_exact(h, 0, 1)) < 1e-11  # MHz; pure float cancellation

    def test_two_transmon_agreement_with_pair_formula(self):
        from xtalk import zz as zzm
        d = 90.0
        j = 0.05 * d
        p = zzm.PairSpectrum(4850.0 + d / 2, 4850.0 - d / 2, -196.0, -195.0, j)
        jm = np.array([[0.0, j], [j, 0.0]])
        h = ed.build_sectors([p.omega1, p.omega2], [p.alpha1, p.alpha2], jm)
        exact = ed.zz_exact(h, 0, 1)
        assert abs(zzm.zz_nn(p).zeta_mhz - exact) / abs(exact) < 0.05

    def test_matches_full_fock_for_small_lattices(self):
        for n in (2, 3, 4):
            omega, alpha, j = random_lattice(n)
            h = ed.build_sectors(omega, alpha, j)
            for i in range(n):
                for k in range(i + 1, n):
                    sector = ed.zz_exact(h, i, k)
                    fock = full_fock_zz(omega, alpha, j, i, k)
                    assert sector == pytest.approx(fock, rel=1e-8, abs=1e-12)

    def test_mediated_coupling_weaker_than_direct(self):
        # open 3-chain: the far pair has nonzero mediated zeta, smaller
        # than the directly coupled pair's
        w = [4810.0, 4960.0, 4890.0]
        j = np.zeros((3, 3))
        j[0, 1] = j[1, 0] = 0.6
        j[1, 2] = j[2, 1] = 0.6
        h = ed.build_sectors(w, [-196.0] * 3, j)
        z12 = ed.zz_exact(h, 0, 1)
        z13 = ed.zz_exact(h, 0, 2)
        assert z13 != 0.0
        assert abs(z13) < abs(z12)

    def test_uniform_shift_invariance(self):
        omega, alpha, j = random_lattice(4)
        h0 = ed.build_sectors(omega, alpha, j)
        h1 = ed.build_sectors(omega + 250.0, alpha, j)
        for i in range(4):
            for k in range(i + 1, 4):
                assert ed.zz_exact(h0, i, k) == pytest.approx(
                    ed.zz_exact(h1, i, k), abs=1e-9)

    def test_assignment_failure_reports_candidates(self):
        # resonant strongly coupled pair: single-excitation states hybridize
        # to 50/50 and no label clears the overlap threshold
        j = np.array([[0.0, 5.0], [5.0, 0.0]])
        h = ed.build_sectors([4850.0, 4850.0], [-196.0, -196.0], j)
        with pytest.raises(ed.AssignmentError) as err:
            ed.zz_exact(h, 0, 1)
        assert len(err.value.candidates) == 2


class TestZZMatrix:
    def test_permutation_equivariance(self):
        omega, alpha, j = random_lattice(5)
        h = ed.build_sectors(omega, alpha, j)
        zz = ed.zz_matrix_exact(h)
        perm = RNG.permutation(5)
        hp = ed.build_sectors(omega[perm], alpha[perm], j[np.ix_(perm, perm)])
        zzp = ed.zz_matrix_exact(hp)
        np.testing.assert_allclose(zzp.values_khz,
                                   zz.values_khz[np.ix_(perm, perm)],
                                   atol=1e-7)

    def test_matrix_is_symmetric_with_method_tag(self):
        omega, alpha, j = random_lattice(4)
        zz = ed.zz_matrix_exact(ed.build_sectors(omega, alpha, j))
        np.testing.assert_array_equal(zz.values_khz, zz.values_khz.T)
        assert zz.method == "exact-diag"

    def test_floor_flags_uncoupled_pairs(self):
        omega, alpha, _ = random_lattice(3)
        zz = ed.zz_matrix_exact(ed.build_sectors(omega, alpha, np.zeros((3, 3))))
        assert np.all(zz.floor_flags[~np.eye(3, dtype=bool)])

    def test_failed_pairs_flagged_not_fatal(self):
        # modes 0 and 1 resonant and strongly coupled; mode 2 detached
        omega = np.array([4850.0, 4850.0, 4990.0])
        alpha = np.array([-196.0, -196.0, -196.0])
        j = np.zeros((3, 3))
        j[0, 1] = j[1, 0] = 5.0
        zz = ed.zz_matrix_exact(ed.build_sectors(omega, alpha, j))
        failed_pairs = {p for p, _ in zz.failed}
        assert failed_pairs
        assert all(np.isnan(zz.values_khz[p]) for p in failed_pairs)
