import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_unitary
from pennspin.errors import DimMismatch, DuplicateSite, NotHermitian, SiteOutOfRange, SpecMismatch
from pennspin.operators import (
    PAULI,
    HamiltonianKind,
    HamiltonianSpec,
    Propagator,
    band_operator,
    build_hamiltonian,
    coupling_operator,
    distances,
    expm,
    field_operator,
    is_hermitian,
    pauli_string,
    spectral_distance,
    unitarity_defect,
)
from pennspin.physics import CouplingMatrix


def kron_oracle(N, factors):
    """Reference tensor product built site by site with np.kron."""
    ops = dict(factors)
    out = np.eye(1)
    for s in range(1, N + 1):
        out = np.kron(out, PAULI[ops.get(s, "i")])
    return out


pauli_strings = st.integers(1, 5).flatmap(
    lambda N: st.tuples(
        st.just(N),
        st.lists(st.tuples(st.integers(1, N), st.sampled_from("xyz")), unique_by=lambda f: f[0], max_size=N),
    )
)


class TestPauliString:
    def test_single_z(self):
        np.testing.assert_array_equal(pauli_string(1, [(1, "z")]), np.diag([1, -1]))

    def test_zz_basis_order(self):
        np.testing.assert_array_equal(np.diagonal(pauli_string(2, [(1, "z"), (2, "z")])), [1, -1, -1, 1])

    @given(pauli_strings)
    def test_matches_kron(self, case):
        N, factors = case
        np.testing.assert_array_equal(pauli_string(N, factors), kron_oracle(N, factors))

    @given(pauli_strings)
    def test_involutive_hermitian_unitary(self, case):
        P = pauli_string(*case)
        np.testing.assert_array_equal(P @ P, np.eye(P.shape[0]))
        assert is_hermitian(P)

    @pytest.mark.parametrize(
        "factors,exc",
        [([(3, "x")], SiteOutOfRange), ([(0, "x")], SiteOutOfRange), ([(1, "x"), (1, "z")], DuplicateSite),
         ([(1, "q")], SpecMismatch)],
    )  # fmt: skip
    def test_errors(self, factors, exc):
        with pytest.raises(exc):
            pauli_string(2, factors)

    def test_site_cap(self):
        with pytest.raises(SiteOutOfRange):
            pauli_string(15, [])


class TestBuilders:
    def test_two_spin_ising_spectrum(self):
        c = CouplingMatrix.dipole_chain(2, 0.7)
        H = build_hamiltonian(HamiltonianSpec("IsingZ"), c)
        np.testing.assert_allclose(sorted(np.linalg.eigvalsh(H)), [-0.7, -0.7, 0.7, 0.7])

    def test_three_spin_bands(self):
        c = CouplingMatrix.dipole_chain(3, 1.0)
        H = build_hamiltonian(HamiltonianSpec("IsingZ"), c)
        H1, H2 = band_operator(c.Jz, 1), band_operator(c.Jz, 2)
        np.testing.assert_allclose(H, H1 + H2)
        # the band-2 pair carries 1/8 of the band-1 coefficient
        np.testing.assert_allclose(H2, pauli_string(3, [(1, "z"), (3, "z")]) / 8)

    def test_ising_oracle(self):
        c = CouplingMatrix.dipole_chain(4, 1.3)
        H = build_hamiltonian(HamiltonianSpec("IsingZ"), c)
        ref = sum(c.Jz[i, j] * kron_oracle(4, [(i + 1, "z"), (j + 1, "z")]) for i, j in itertools.combinations(range(4), 2))
        np.testing.assert_allclose(H, ref, atol=1e-14)

    def test_full_spin_oracle_and_magnetization(self):
        c = CouplingMatrix(CouplingMatrix.dipole_chain(4).Jz, CouplingMatrix.dipole_chain(4, 0.3).Jz, np.full(4, 7.0))
        H = build_hamiltonian(HamiltonianSpec("FullSpin"), c)
        ref = sum(3.5 * kron_oracle(4, [(i, "z")]) for i in range(1, 5))
        for i, j in itertools.combinations(range(4), 2):
            f = [(i + 1, "z"), (j + 1, "z")]
            ref = ref + c.Jz[i, j] * kron_oracle(4, f)
            for a in "xy":
                ref = ref - 0.5 * c.Jxy[i, j] * kron_oracle(4, [(i + 1, a), (j + 1, a)])
        np.testing.assert_allclose(H, ref, atol=1e-14)
        Mz = field_operator(4, 1.0, "z")
        assert np.max(np.abs(H @ Mz - Mz @ H)) <= 1e-12

    def test_h0_commutes_with_hc(self):
        c = CouplingMatrix(CouplingMatrix.dipole_chain(4).Jz, CouplingMatrix.dipole_chain(4, 0.2).Jz, np.full(4, 9.0))
        H0 = field_operator(4, 4.5, "z")
        Hc = build_hamiltonian(HamiltonianSpec("FullSpin"), c) - H0
        assert np.max(np.abs(H0 @ Hc - Hc @ H0)) <= 1e-12

    def test_transverse_and_mixed(self):
        c = CouplingMatrix.dipole_chain(3, 1.0)
        X = build_hamiltonian(HamiltonianSpec("TransverseDrive", eta=0.4), c)
        np.testing.assert_allclose(X, 0.4 * sum(kron_oracle(3, [(i, "x")]) for i in (1, 2, 3)))
        tau = (0.5, 0.3, 0.2)
        H = build_hamiltonian(HamiltonianSpec("MixedXYZ", tau=tau, eta=0.4), c)
        ref = 0.5 * (X + coupling_operator(c.Jz, "z")) + 0.3 * coupling_operator(c.Jz, "x") + 0.2 * coupling_operator(c.Jz, "y")
        np.testing.assert_allclose(H, ref)

    def test_neighbor_band_and_custom(self):
        c = CouplingMatrix.dipole_chain(4, 1.0)
        H = build_hamiltonian(HamiltonianSpec("NeighborBand", band=3), c)
        np.testing.assert_allclose(H, pauli_string(4, [(1, "z"), (4, "z")]) / 27)
        with pytest.raises(SpecMismatch):
            build_hamiltonian(HamiltonianSpec("NeighborBand", band=4), c)
        Hc = build_hamiltonian(HamiltonianSpec("Custom", terms=((2.0, [(1, "x"), (2, "y")]),)), c)
        np.testing.assert_allclose(Hc, 2 * kron_oracle(4, [(1, "x"), (2, "y")]))
        with pytest.raises(NotHermitian):
            build_hamiltonian(HamiltonianSpec("Custom", terms=((1j, [(1, "x")]),)), c)

    @pytest.mark.parametrize("tau", [(-0.1, 0.5, 0.5), (0.6, 0.6, 0.0)])
    def test_bad_tau(self, tau):
        with pytest.raises(SpecMismatch):
            HamiltonianSpec("MixedXYZ", tau=tau)

    def test_spec_n_mismatch(self):
        with pytest.raises(SpecMismatch):
            build_hamiltonian(HamiltonianSpec("IsingZ", N=3), CouplingMatrix.dipole_chain(4))

    def test_band_weights(self):
        c = CouplingMatrix.dipole_chain(5, 1.0)
        w = (0.5, -1.0, 2.0)
        H = coupling_operator(c.Jz, "z", w)
        ref = sum(wn * band_operator(c.Jz, n) for n, wn in enumerate(w, 1))
        np.testing.assert_allclose(H, ref, atol=1e-14)


class TestExpm:
    def test_zero_time(self):
        H = build_hamiltonian(HamiltonianSpec("TransverseDrive", eta=1.0), CouplingMatrix.dipole_chain(2))
        np.testing.assert_allclose(expm(H, 0.0), np.eye(4))

    def test_full_precession(self):
        w = 3.0
        U = expm(w / 2 * PAULI["z"], 2 * math.pi / w)
        np.testing.assert_allclose(U, -np.eye(2), atol=1e-14)

    def test_ising_quarter_phase(self):
        J = 1.7
        H = build_hamiltonian(HamiltonianSpec("IsingZ"), CouplingMatrix.dipole_chain(2, J))
        U = expm(H, math.pi / 4 / J)
        q = np.exp(-1j * math.pi / 4)
        np.testing.assert_allclose(np.diagonal(U), [q, q.conj(), q.conj(), q], atol=1e-14)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            expm(np.array([[0, 1], [0, 0]]), 1.0)

    @given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_semigroup_and_scipy_oracle(self, seed, t1, t2):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        H = A + A.conj().T
        P = Propagator(H)
        np.testing.assert_allclose(P(t1) @ P(t2), P(t1 + t2), atol=1e-10)
        np.testing.assert_allclose(P(t1), scipy.linalg.expm(-1j * H * t1), atol=1e-10)
        assert unitarity_defect(P(t1)) <= 1e-10
        M = rng.standard_normal((8, 3))
        np.testing.assert_allclose(P.apply(t2, M), P(t2) @ M, atol=1e-10)

    def test_commuting_exponentials(self):
        c = CouplingMatrix.dipole_chain(4)
        H1, H2 = band_operator(c.Jz, 1), band_operator(c.Jz, 2)
        np.testing.assert_allclose(expm(H1, 0.8) @ expm(H2, 0.8), expm(H1 + H2, 0.8), atol=1e-10)


class TestDistance:
    def test_identical(self):
        U = random_unitary(np.random.default_rng(1), 4)
        assert spectral_distance(U, U) == 0.0

    def test_global_phase_extremes(self):
        U = random_unitary(np.random.default_rng(2), 4)
        assert spectral_distance(U, -U) == pytest.approx(2.0)
        assert spectral_distance(U, -U, phase_optimized=True) <= 1e-14

    def test_single_qubit_brute_force(self):
        th = math.pi / 2
        V = scipy.linalg.expm(-1j * th / 2 * PAULI["z"])
        D = np.eye(2) - V
        brute = max(np.linalg.norm(D @ v) for v in (np.array([1, 0]), np.array([0, 1])))
        assert spectral_distance(np.eye(2), V) == pytest.approx(brute)
        # phase optimisation splits the two diagonal phases evenly
        assert spectral_distance(np.eye(2), V, phase_optimized=True) == pytest.approx(2 * math.sin(th / 4))

    def test_phase_grid_oracle(self):
        rng = np.random.default_rng(3)
        U = random_unitary(rng, 4)
        V = U @ scipy.linalg.expm(-1j * 0.05 * np.diag([1.0, -0.5, 0.3, 0.2])) * np.exp(0.7j)
        grid = min(np.linalg.norm(U - np.exp(1j * p) * V, 2) for p in np.linspace(-np.pi, np.pi, 20001))
        raw, opt = distances(U, V)
        assert opt <= raw
        # relative phases span 0.075 rad; the best global phase sits mid-span
        assert opt == pytest.approx(2 * math.sin(0.075 / 4), rel=1e-12)
        assert opt <= grid

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            spectral_distance(np.eye(2), np.eye(4))

    @given(st.integers(0, 2**31 - 1))
    def test_triangle_and_product_bounds(self, seed):
        rng = np.random.default_rng(seed)
        A, B, C, D = (random_unitary(rng, 4) for _ in range(4))
        d = spectral_distance
        assert d(A, C) <= d(A, B) + d(B, C) + 1e-12
        assert d(A @ B, C @ D) <= d(A, C) + d(B, D) + 1e-12
        assert 0.0 <= d(A, B) <= 2.0 + 1e-12
