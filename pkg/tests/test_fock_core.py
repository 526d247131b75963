import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twocrystal import (
    InvalidCoupling,
    InvalidModeSet,
    InvalidSelection,
    SectorState,
    apply_to_pair,
    apply_to_uv,
    apply_unitary,
    brute_force_unitary,
    build_coupling_table,
    closed_form_unitary,
    dc_coefficients,
)
from twocrystal.fock_core import SMALL_XI, random_coupling_table, sector_generator, unitarity_defect

from conftest import coupling_tables

# exp(i K) for eta = [0.1, 0.2i, -0.05], evaluated with mpmath at 40 digits.
THREE_MODE_U = np.array(
    [
        [0.97386464296174316199, 0.099127294005998757022j, 0.19825458801199751404, -0.049563647002999378511j],
        [0.099127294005998757022j, 0.99502183675461774514, 0.0099563264907645097191j, 0.0024890816226911274298],
        [-0.19825458801199751404, -0.0099563264907645097191j, 0.98008734701847098056, 0.0049781632453822548596j],
        [-0.049563647002999378511j, 0.0024890816226911274298, -0.0049781632453822548596j, 0.99875545918865443629],
    ]
)


def series(coef, xi, terms=40):
    """Alternating power series sum_n (-1)^n xi^(2n) * coef(n)."""
    return sum((-1) ** n * xi ** (2 * n) * coef(n) for n in range(terms))


def taylor_expm(a, terms=80):
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for n in range(1, terms):
        term = term @ a / n
        out = out + term
    return out


class TestBuildCouplingTable:
    def test_zero_coupling(self):
        assert build_coupling_table([0], 0).xi == 0

    def test_single_mode(self):
        assert build_coupling_table([math.pi / 2], 0).xi == pytest.approx(math.pi / 2, rel=1e-15)

    def test_three_mode(self):
        t = build_coupling_table([0.1, 0.2j, -0.05], 0)
        assert t.xi == pytest.approx(0.2291287847477920003, rel=1e-15)
        assert list(t.eta) == [0.1, 0.2j, -0.05]

    @pytest.mark.parametrize(
        "etas, sel, exc",
        [
            ([], 0, InvalidModeSet),
            ([0.1, 0.2], 2, InvalidSelection),
            ([0.1], -1, InvalidSelection),
            ([0.1, float("nan")], 0, InvalidCoupling),
            ([0.1, complex(0, float("inf"))], 0, InvalidCoupling),
        ],
    )
    def test_errors(self, etas, sel, exc):
        with pytest.raises(exc):
            build_coupling_table(etas, sel)

    @given(coupling_tables())
    def test_xi_squared_is_total_coupling(self, table):
        total = float(np.sum(np.abs(table.eta) ** 2))
        assert table.xi**2 == pytest.approx(total, rel=1e-14)

    def test_table_is_immutable(self):
        t = build_coupling_table([0.1, 0.2], 0)
        with pytest.raises(ValueError):
            t.eta[0] = 1.0


class TestCoefficients:
    def test_identity_crystal(self):
        c = dc_coefficients(build_coupling_table([0], 0))
        assert c.beta == 1
        assert c.alpha[0] == 0 and c.gamma[0] == 0

    def test_full_conversion(self):
        c = dc_coefficients(build_coupling_table([math.pi / 2], 0))
        assert c.beta == pytest.approx(0, abs=1e-16)
        assert c.alpha[0] == pytest.approx(1j, abs=1e-15)
        assert c.gamma[0] == pytest.approx(1, abs=1e-15)

    def test_three_mode_against_printed_series(self, three_mode):
        xi = three_mode.xi
        eta = np.array([0.1, 0.2j, -0.05])
        beta = series(lambda n: 1 / math.factorial(2 * n), xi)
        alpha = 1j * eta * series(lambda n: 1 / math.factorial(2 * n + 1), xi)
        gamma = np.conj(eta[0]) * eta * series(lambda n: 1 / math.factorial(2 * n + 2), xi)
        assert three_mode.beta == pytest.approx(beta, abs=1e-15)
        np.testing.assert_allclose(three_mode.alpha, alpha, atol=1e-15)
        np.testing.assert_allclose(three_mode.gamma, gamma, atol=1e-15)

    def test_three_mode_frozen(self, three_mode):
        assert three_mode.beta == pytest.approx(0.97386464296174316199, abs=1e-15)
        assert three_mode.alpha[0] == pytest.approx(0.099127294005998757022j, abs=1e-15)
        assert three_mode.gamma[0] == pytest.approx(1 - 0.99502183675461774514, abs=1e-15)

    @given(coupling_tables())
    def test_normalization(self, table):
        c = dc_coefficients(table)
        assert abs(c.beta**2 + np.sum(np.abs(c.alpha) ** 2) - 1) <= 1e-12
        assert abs(np.sum(np.abs(c.alpha) ** 2) - math.sin(c.xi) ** 2) <= 1e-12

    @given(coupling_tables())
    def test_gamma_relation(self, table):
        c = dc_coefficients(table)
        lhs = c.gamma * math.sin(c.xi) ** 2
        rhs = np.conj(c.alpha_sel) * c.alpha * (1 - c.beta)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)

    @given(coupling_tables(xi_max=0.1))
    def test_gamma_smaller_than_alpha_product(self, table):
        c = dc_coefficients(table)
        bound = abs(c.alpha_sel) * np.abs(c.alpha)
        assert np.all(np.abs(c.gamma) <= bound * (1 + 1e-12))

    @pytest.mark.parametrize("xi", [1e-9, 0.5 * SMALL_XI, 2 * SMALL_XI, 1e-6])
    def test_small_coupling_limit(self, xi):
        eta = np.array([0.6, 0.8j]) * xi
        c = dc_coefficients(build_coupling_table(eta, 0))
        np.testing.assert_allclose(c.alpha, 1j * eta, rtol=0, atol=1e-12 * xi)
        np.testing.assert_allclose(c.gamma, np.conj(eta[0]) * eta / 2, rtol=1e-12, atol=0)
        assert c.beta == pytest.approx(1, abs=1e-12)

    def test_limit_is_continuous_across_threshold(self):
        eta = np.array([0.6, 0.8j])
        below = dc_coefficients(build_coupling_table(eta * SMALL_XI * (1 - 1e-9), 0))
        above = dc_coefficients(build_coupling_table(eta * SMALL_XI * (1 + 1e-9), 0))
        np.testing.assert_allclose(below.gamma / SMALL_XI**2, above.gamma / SMALL_XI**2, rtol=1e-8)
        np.testing.assert_allclose(below.alpha / SMALL_XI, above.alpha / SMALL_XI, rtol=1e-8)


class TestSectorMaps:
    def test_identity_crystal(self):
        c = dc_coefficients(build_coupling_table([0, 0], 1))
        uv = apply_to_uv(c)
        assert uv.uv_amp == 1 and not np.any(uv.pair_amps)
        p = apply_to_pair(c, 1)
        assert p.uv_amp == 0
        np.testing.assert_array_equal(p.pair_amps, [0, 1])

    def test_full_conversion(self):
        c = dc_coefficients(build_coupling_table([math.pi / 2], 0))
        uv = apply_to_uv(c)
        assert uv.uv_amp == pytest.approx(0, abs=1e-16)
        assert uv.pair_amps[0] == pytest.approx(1j, abs=1e-15)
        p = apply_to_pair(c, 0)
        assert p.uv_amp == pytest.approx(1j, abs=1e-15)
        assert p.pair_amps[0] == pytest.approx(0, abs=1e-15)

    def test_three_mode_columns(self, three_mode):
        np.testing.assert_allclose(apply_to_uv(three_mode).vector, THREE_MODE_U[:, 0], atol=1e-15)
        for m in range(3):
            np.testing.assert_allclose(apply_to_pair(three_mode, m).vector, THREE_MODE_U[:, m + 1], atol=1e-15)

    def test_selected_pair_matches_gamma_form(self, three_mode):
        p = apply_to_pair(three_mode, 0)
        assert p.uv_amp == -np.conj(three_mode.alpha[0])
        assert p.pair_amps[0] == pytest.approx(1 - three_mode.gamma[0], abs=1e-16)
        np.testing.assert_allclose(p.pair_amps[1:], -three_mode.gamma[1:], atol=1e-17)

    @given(coupling_tables(), st.data())
    def test_sign_consistency(self, table, data):
        c = dc_coefficients(table)
        m = data.draw(st.integers(0, c.n_modes - 1))
        assert apply_to_pair(c, m).uv_amp == -np.conj(c.alpha[m])

    def test_invalid_input_mode(self, three_mode):
        with pytest.raises(InvalidSelection):
            apply_to_pair(three_mode, 3)


class TestUnitaries:
    def test_identity(self):
        t = build_coupling_table([0, 0, 0], 0)
        np.testing.assert_array_equal(brute_force_unitary(t), np.eye(4))
        np.testing.assert_array_equal(closed_form_unitary(dc_coefficients(t)), np.eye(4))

    def test_single_mode_is_i_sigma_x(self):
        t = build_coupling_table([math.pi / 2], 0)
        expected = np.array([[0, 1j], [1j, 0]])
        np.testing.assert_allclose(brute_force_unitary(t), expected, atol=1e-15)
        np.testing.assert_allclose(closed_form_unitary(dc_coefficients(t)), expected, atol=1e-15)

    def test_three_mode_oracle(self, three_mode):
        t = three_mode.table
        np.testing.assert_allclose(brute_force_unitary(t), THREE_MODE_U, atol=1e-14)
        np.testing.assert_allclose(closed_form_unitary(three_mode), THREE_MODE_U, atol=1e-15)

    def test_expm_agrees_with_plain_taylor_sum(self, rng):
        for _ in range(5):
            t = random_coupling_table(rng, 6)
            np.testing.assert_allclose(
                brute_force_unitary(t), taylor_expm(1j * sector_generator(t)), atol=1e-13
            )

    def test_generator_is_hermitian(self, three_mode):
        k = sector_generator(three_mode.table)
        np.testing.assert_array_equal(k, k.conj().T)

    @given(coupling_tables(max_modes=50))
    def test_oracle_equivalence(self, table):
        u = closed_form_unitary(dc_coefficients(table))
        assert np.max(np.abs(u - brute_force_unitary(table))) <= 1e-10
        assert unitarity_defect(u) <= 1e-10


class TestApplyUnitary:
    def test_identity(self):
        s = SectorState(0.3 + 0.1j, [0.5, -0.2j])
        out = apply_unitary(np.eye(3), s)
        np.testing.assert_array_equal(out.vector, s.vector)

    def test_uv_basis_vector_gives_uv_image(self, three_mode):
        u = closed_form_unitary(three_mode)
        out = apply_unitary(u, SectorState(1, np.zeros(3)))
        np.testing.assert_array_equal(out.vector, apply_to_uv(three_mode).vector)

    @given(coupling_tables(), st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, table, seed):
        r = np.random.default_rng(seed)
        v = r.normal(size=table.n_modes + 1) + 1j * r.normal(size=table.n_modes + 1)
        v /= np.linalg.norm(v)
        out = apply_unitary(closed_form_unitary(dc_coefficients(table)), SectorState.from_vector(v))
        assert out.norm_sq() == pytest.approx(1, abs=1e-12)

    def test_dimension_mismatch(self, three_mode):
        with pytest.raises(ValueError):
            apply_unitary(np.eye(3), SectorState(1, np.zeros(3)))

    def test_state_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SectorState(float("nan"), [0])

    def test_state_is_not_normalized(self):
        s = SectorState(1, [0.5])
        assert s.norm_sq() == 1.25
