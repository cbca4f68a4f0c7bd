import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pennspin.constants import CODATA_2018, load_constants
from pennspin.errors import HierarchyViolation, NonPositiveInput, ZeroSpacing
from pennspin.physics import (
    CouplingMatrix,
    TrapParams,
    canonical_error_bound,
    coupling_constants,
    derive_frequencies,
)

TWO_PI = 2 * math.pi
E, ME, HBAR, EPS0 = 1.602176634e-19, 9.1093837015e-31, 1.054571817e-34, 8.8541878128e-12


def reference_trap(N=4, b=200.0, d=100e-6, **kw):
    ov = {"omega_z": TWO_PI * 160e6, "omega_s": TWO_PI * 100e9}
    return TrapParams(N=N, b=b, d=d, overrides=ov, **kw)


def test_constants_table_is_codata_2018():
    assert dict(CODATA_2018) == {"e": E, "m_e": ME, "hbar": HBAR, "epsilon_0": EPS0}
    assert load_constants() is CODATA_2018


def test_constants_override_file(tmp_path, monkeypatch):
    p = tmp_path / "k.json"
    p.write_text('{"hbar": 1.0}')
    monkeypatch.setenv("PENNSPIN_CONSTANTS", str(p))
    k = load_constants()
    assert k["hbar"] == 1.0 and k["e"] == E
    p.write_text('{"planck": 1.0}')
    with pytest.raises(KeyError):
        load_constants()


class TestFrequencies:
    def test_magnetron_from_overrides(self):
        p = TrapParams(N=2, b=0.0, d=1e-4, overrides={"omega_z": TWO_PI * 100e6, "omega_c": TWO_PI * 100e9})
        f = derive_frequencies(p)
        np.testing.assert_allclose(f.omega_m / TWO_PI, 50e3, rtol=1e-12)

    def test_epsilon_reference_point(self):
        f = derive_frequencies(reference_trap())
        wz = TWO_PI * 160e6
        expected = E * 200 / (ME * wz) * math.sqrt(HBAR / (2 * ME * wz))
        assert f.epsilon == pytest.approx(expected, rel=1e-14)
        assert f.epsilon == pytest.approx(8.396e-3, rel=1e-3)

    def test_zero_gradient_gives_zero_epsilon(self):
        assert derive_frequencies(reference_trap(b=0.0)).epsilon == 0.0

    def test_from_voltages_and_field(self):
        p = TrapParams.uniform(N=3, B0=3.0, b=10.0, V0=1.0, ell=1e-3, d=1e-4)
        f = derive_frequencies(p)
        assert f.omega_z == pytest.approx(math.sqrt(2 * E * 1.0 / (ME * 1e-6)))
        free = E * 3.0 / ME
        # self-consistency of the cyclotron/magnetron pair
        np.testing.assert_allclose(f.omega_c + f.omega_m, free, rtol=1e-12)
        np.testing.assert_allclose(f.omega_m, f.omega_z**2 / (2 * f.omega_c), rtol=1e-12)
        np.testing.assert_allclose(f.omega_s, 2.002 * E * 3.0 / (2 * ME), rtol=1e-14)
        np.testing.assert_allclose(f.omega_a, f.omega_s - f.omega_c)

    def test_per_site_fields(self):
        p = TrapParams(N=3, b=1.0, d=1e-4, B0=[3.0, 3.1, 3.2], V0=1.0, ell=1e-3)
        f = derive_frequencies(p)
        assert np.all(np.diff(f.omega_s) > 0)

    def test_hierarchy_violation(self):
        p = TrapParams(N=2, b=0.0, d=1e-4, overrides={"omega_z": TWO_PI * 10e9, "omega_c": TWO_PI * 100e9})
        with pytest.raises(HierarchyViolation):
            derive_frequencies(p)

    def test_large_epsilon_warns(self):
        with pytest.warns(RuntimeWarning, match="epsilon"):
            derive_frequencies(reference_trap(b=1e5))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"N": 1},
            {"b": -1.0},
            {"d": 0.0},
            {"overrides": {"omega_z": -1.0, "omega_s": 1e12}},
            {"overrides": {"omega_s": 1e12}},  # no omega_z, no V0/ell
        ],
    )
    def test_bad_params(self, kwargs):
        base = dict(N=3, b=1.0, d=1e-4, overrides={"omega_z": 1e9, "omega_s": 1e12})
        base.update(kwargs)
        with pytest.raises((NonPositiveInput, ZeroSpacing)):
            TrapParams(**base)


class TestCouplings:
    def test_nearest_neighbour_oracle(self):
        p = reference_trap(N=3)
        c = coupling_constants(derive_frequencies(p), p)
        wz = TWO_PI * 160e6
        oracle = (2.002 / 2) ** 2 * HBAR * E**4 * 200**2 / (16 * math.pi * EPS0 * ME**4 * wz**4 * (100e-6) ** 3)
        assert c.jz_nn == pytest.approx(oracle, rel=1e-13)
        assert c.jz_nn == pytest.approx(8.898, rel=1e-3)

    def test_dipole_law(self):
        p = reference_trap(N=5)
        c = coupling_constants(derive_frequencies(p), p)
        assert c.Jz[0, 2] / c.Jz[0, 1] == pytest.approx(1 / 8, rel=1e-14)
        assert c.Jz[0, 3] / c.Jz[0, 1] == pytest.approx(1 / 27, rel=1e-14)
        np.testing.assert_array_equal(c.Jz, c.Jz.T)
        assert np.all(np.diagonal(c.Jz) == 0)

    def test_anisotropy_ratio(self):
        p = TrapParams(N=3, b=10.0, d=1e-4, overrides={"omega_z": TWO_PI * 100e6, "omega_c": TWO_PI * 100e9})
        f = derive_frequencies(p)
        c = coupling_constants(f, p)
        ratio = c.Jxy[0, 1] / c.Jz[0, 1]
        expected = f.omega_z**4 / (4 * f.omega_a[1] ** 2 * f.omega_c[1] ** 2)
        assert ratio == pytest.approx(expected, rel=1e-12)
        assert ratio < 1e-6

    def test_irregular_geometry(self):
        d = np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]]) * 1e-4
        p = TrapParams(N=3, b=50.0, d=d, overrides={"omega_z": 1e9, "omega_s": 6e11})
        c = coupling_constants(derive_frequencies(p), p)
        prod = c.Jz * d**3
        off = ~np.eye(3, dtype=bool)
        np.testing.assert_allclose(prod[off], prod[0, 1], rtol=1e-13)

    def test_coincident_traps(self):
        d = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]]) * 1e-4
        with pytest.raises(ZeroSpacing):
            TrapParams(N=3, b=1.0, d=d, overrides={"omega_z": 1e9, "omega_s": 6e11})

    @given(st.floats(1.0, 500.0), st.floats(1.5, 4.0))
    def test_gradient_scaling(self, b, k):
        p1, p2 = reference_trap(b=b), reference_trap(b=k * b)
        c1 = coupling_constants(derive_frequencies(p1), p1)
        c2 = coupling_constants(derive_frequencies(p2), p2)
        np.testing.assert_allclose(c2.Jz, k**2 * c1.Jz, rtol=1e-12)

    def test_scaled_and_truncated(self):
        c = CouplingMatrix.dipole_chain(6, 2.0, jxy_ratio=1e-3)
        assert c.scaled_to(5.0).jz_nn == pytest.approx(5.0)
        t = c.truncated(3)
        assert t.N == 3 and t.Jz[0, 2] == c.Jz[0, 2]
        with pytest.raises(NonPositiveInput):
            c.truncated(7)

    def test_rwa_ratio(self):
        c = CouplingMatrix(np.array([[0, 1.0], [1.0, 0]]), np.array([[0, 0.1], [0.1, 0]]), np.array([10.0, 12.0]))
        assert c.rwa_ratio() == pytest.approx(0.05)
        assert CouplingMatrix.dipole_chain(3).rwa_ratio() == math.inf


class TestCanonicalBound:
    def test_values(self):
        assert canonical_error_bound(2, 0.5, 0.01) == pytest.approx(2e-4)
        assert canonical_error_bound(10, 3, 0.0) == 0.0

    def test_reference_chain(self):
        eps = derive_frequencies(reference_trap()).epsilon
        assert canonical_error_bound(50, 0, eps) == pytest.approx(1.762e-3, rel=1e-3)

    @given(st.integers(1, 200), st.floats(0, 50), st.floats(0, 0.1))
    def test_linear_in_N_and_occupation(self, N, kbar, eps):
        base = canonical_error_bound(N, kbar, eps)
        assert canonical_error_bound(2 * N, kbar, eps) == pytest.approx(2 * base, rel=1e-12, abs=1e-300)
        assert canonical_error_bound(N, 2 * kbar + 0.5, eps) == pytest.approx(2 * base, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("N,kbar", [(0, 0), (3, -1)])
    def test_bad_inputs(self, N, kbar):
        with pytest.raises(NonPositiveInput):
            canonical_error_bound(N, kbar, 0.01)


def test_no_warning_at_reference_point():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        derive_frequencies(reference_trap())
