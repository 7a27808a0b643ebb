import cmath
import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose

from qrwsearch.coin import (
    CoinMatrix,
    CoinSpec,
    build_householder_coin,
    coin_elements_analytic,
    delta_from_moduli,
    grover_coin,
    householder_elements,
    marking_coin,
    moduli_from_delta,
    verify_unitary,
)
from qrwsearch.errors import ValidationError


angles = st.floats(min_value=0.0, max_value=2 * math.pi)
dimensions = st.sampled_from([2, 4, 8, 16])


class TestCoinSpec(object):
    @pytest.mark.parametrize("m", [0, 1, 3, 6, 12])
    def test_rejects_bad_dimension(self, m):
        with pytest.raises(ValidationError) as excinfo:
            CoinSpec(math.pi, math.pi, m)
        assert excinfo.value.kind == "dimension"

    def test_rejects_non_finite_phase(self):
        with pytest.raises(ValidationError):
            CoinSpec(float("nan"), 0.0, 4)

    def test_for_qubits(self):
        assert CoinSpec.for_qubits(1, 2, 3) == CoinSpec(1.0, 2.0, 8)


class TestHouseholderCoin(object):
    def test_grover_point(self):
        coin = build_householder_coin(CoinSpec(math.pi, math.pi, 4))
        assert_allclose(coin.entries, grover_coin(4).entries, atol=1e-15)
        assert coin.diagonal == pytest.approx(-0.5)
        assert coin.off_diagonal == pytest.approx(0.5)

    def test_identity_at_zero(self):
        coin = build_householder_coin(CoinSpec(0.0, 0.0, 8))
        assert_allclose(coin.entries, np.eye(8), atol=1e-15)

    def test_quarter_phase(self):
        coin = build_householder_coin(CoinSpec(math.pi / 2, 0.0, 4))
        assert coin.diagonal == pytest.approx(0.75 + 0.25j, abs=1e-15)
        assert coin.off_diagonal == pytest.approx(-0.25 + 0.25j, abs=1e-15)

    def test_unitary_for_random_specs(self):
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            phi, zeta = rng.uniform(0, 2 * math.pi, 2)
            m = int(rng.choice([2, 4, 8, 16]))
            coin = build_householder_coin(CoinSpec(phi, zeta, m))
            assert verify_unitary(coin) <= 1e-12

    @given(angles, angles, dimensions)
    def test_two_pi_periodic(self, phi, zeta, m):
        a, b = householder_elements(phi, zeta, m)
        a_shifted, b_shifted = householder_elements(phi + 2 * math.pi, zeta, m)
        assert abs(a - a_shifted) <= 1e-12
        assert abs(b - b_shifted) <= 1e-12

    @given(angles, angles, dimensions)
    def test_matrix_periodic_in_zeta(self, phi, zeta, m):
        coin = build_householder_coin(CoinSpec(phi, zeta, m))
        shifted = build_householder_coin(CoinSpec(phi, zeta + 2 * math.pi, m))
        assert_allclose(shifted.entries, coin.entries, atol=1e-12)


class TestFixedCoins(object):
    def test_grover_coins(self):
        assert_allclose(grover_coin(2).entries, [[0, 1], [1, 0]], atol=1e-15)
        assert grover_coin(4).diagonal == pytest.approx(-0.5)
        assert grover_coin(4).off_diagonal == pytest.approx(0.5)
        assert grover_coin(8).diagonal == pytest.approx(-0.75)
        assert grover_coin(8).off_diagonal == pytest.approx(0.25)

    def test_marking_coin(self):
        assert_allclose(marking_coin(2).entries, -np.eye(2))
        assert_allclose(marking_coin(4).entries, -np.eye(4))

    def test_dimension_checked(self):
        with pytest.raises(ValidationError):
            grover_coin(3)
        with pytest.raises(ValidationError):
            marking_coin(1)


class TestAnalyticElements(object):
    def test_grover_point(self):
        elements = coin_elements_analytic(CoinSpec(math.pi, math.pi, 4))
        assert elements.a_mod == pytest.approx(0.5, abs=1e-15)
        assert elements.b_mod == pytest.approx(0.5, abs=1e-15)
        assert math.cos(elements.delta) == pytest.approx(-1.0, abs=1e-12)
        assert not elements.degenerate

    def test_degenerate_at_zero(self):
        elements = coin_elements_analytic(CoinSpec(0.0, 1.234, 4))
        assert elements.a_mod == pytest.approx(1.0, abs=1e-15)
        assert elements.b_mod == 0.0
        assert elements.b_phase == 0.0
        assert elements.degenerate

    def test_quarter_phase(self):
        elements = coin_elements_analytic(CoinSpec(math.pi / 2, 0.0, 4))
        a = elements.a_mod * cmath.exp(-1j * elements.a_phase)
        b = elements.b_mod * cmath.exp(-1j * elements.b_phase)
        assert a == pytest.approx(0.75 + 0.25j, abs=1e-12)
        assert b == pytest.approx(-0.25 + 0.25j, abs=1e-12)

    @given(angles, angles, dimensions)
    def test_matches_matrix(self, phi, zeta, m):
        elements = coin_elements_analytic(CoinSpec(phi, zeta, m))
        coin = build_householder_coin(CoinSpec(phi, zeta, m))
        a = elements.a_mod * cmath.exp(-1j * elements.a_phase)
        assert abs(a - coin.diagonal) <= 1e-12
        if not elements.degenerate:
            b = elements.b_mod * cmath.exp(-1j * elements.b_phase)
            assert abs(b - coin.off_diagonal) <= 1e-12


class TestModuli(object):
    @pytest.mark.parametrize(
        "m, delta, expected",
        [
            (4, math.pi, (0.5, 0.5)),
            (4, math.pi / 2, (1.0, 0.0)),
            (8, math.pi, (0.75, 0.25)),
        ],
    )
    def test_moduli_from_delta(self, m, delta, expected):
        assert_allclose(moduli_from_delta(m, delta), expected, atol=1e-12)

    def test_moduli_domain(self):
        with pytest.raises(ValidationError):
            moduli_from_delta(2, math.pi)
        with pytest.raises(ValidationError):
            moduli_from_delta(4, 0.1)

    def test_delta_from_moduli(self):
        assert delta_from_moduli(4, 0.5, 0.5) == pytest.approx(math.pi)
        half = 1 / math.sqrt(2)
        assert delta_from_moduli(2, half, half) == pytest.approx(math.pi / 2)

    def test_delta_domain(self):
        with pytest.raises(ValidationError):
            delta_from_moduli(4, 0.0, 0.5)
        with pytest.raises(ValidationError):
            delta_from_moduli(8, 0.1, 0.9)

    @given(
        st.floats(min_value=math.pi / 2, max_value=math.pi), st.sampled_from([4, 8, 16])
    )
    def test_round_trip_is_unitary(self, delta, m):
        a, b = moduli_from_delta(m, delta)
        assert a ** 2 + (m - 1) * b ** 2 == pytest.approx(1.0, abs=1e-12)
        if b > 1e-9:
            assert delta_from_moduli(m, a, b) == pytest.approx(delta, abs=1e-7)


class TestVerifyUnitary(object):
    def test_grover(self):
        assert verify_unitary(grover_coin(4)) <= 1e-15

    def test_non_unitary(self):
        doubled = CoinMatrix(2 * np.eye(2, dtype=complex))
        assert verify_unitary(doubled) == pytest.approx(3.0)

    def test_plain_array(self):
        assert verify_unitary(np.eye(4)) == 0.0
