"""Tests for the independent equilibrium oracles."""

from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest

from qrace.engine.errors import DimensionError, EnumerationLimitError
from qrace.engine.payoff import MixedStrategy, RaceConfig, Role, Variant, payoff_matrix_2p
from qrace.engine.verify import (
    best_response_set,
    mangasarian_stone_value,
    race_evaluators,
    support_enumeration_2p,
    verify_profile,
    verify_profile_np,
)

# --- Fixtures ---


@pytest.fixture
def half_matrices(half_one):
    """A = B = [[1/4, 1/2], [1/2, 0]] for p = (1/2, 1)."""
    a = payoff_matrix_2p(half_one, half_one, role=Role.ROW)
    b = payoff_matrix_2p(half_one, half_one, role=Role.COLUMN)
    return a, b


@pytest.fixture
def mixed_third():
    return MixedStrategy.from_weights([F(2, 3), F(1, 3)])


# ---------------------------------------------------------------------------
# Tests: Best responses
# ---------------------------------------------------------------------------


class TestBestResponse:
    def test_indifferent_at_equilibrium(self, half_matrices, mixed_third):
        """Against (2/3, 1/3) both times pay exactly 1/3."""
        a, _ = half_matrices
        br = best_response_set(a, mixed_third)
        assert br.times == (1, 2)
        assert br.value == F(1, 3)

    def test_pure_opponent(self, half_matrices):
        a, _ = half_matrices
        br = best_response_set(a, MixedStrategy.pure(1, 2))
        assert br.times == (2,)
        assert list(br.payoffs) == [F(1, 4), F(1, 2)]

    def test_role_taken_from_matrix(self, half_matrices):
        """A column matrix is read as x^T B e_t even when ROW is passed."""
        _, b = half_matrices
        br = best_response_set(b, MixedStrategy.pure(2, 2), role=Role.ROW)
        assert br.times == (1,)
        assert br.value == F(1, 2)

    def test_matrix_free_source(self, grover_1e3):
        row_eval, _ = race_evaluators(grover_1e3, grover_1e3)
        dense = payoff_matrix_2p(grover_1e3, grover_1e3, role=Role.ROW)
        y = MixedStrategy.uniform(range(10, 25), grover_1e3.k)
        assert best_response_set(row_eval, y).times == best_response_set(dense, y).times


# ---------------------------------------------------------------------------
# Tests: Verification
# ---------------------------------------------------------------------------


class TestVerifyProfile:
    def test_equilibrium(self, half_matrices, mixed_third):
        a, b = half_matrices
        verdict = verify_profile(a, b, mixed_third, mixed_third)
        assert verdict.is_exact
        assert verdict.epsilon_approx == 0.0
        assert verdict.epsilon_well_supported == 0.0
        assert verdict.payoffs == pytest.approx([1 / 3, 1 / 3])

    def test_both_measure_first(self, half_matrices):
        """(e_1, e_1) pays 1/4 each, a move to time 2 pays 1/2."""
        a, b = half_matrices
        e1 = MixedStrategy.pure(1, 2)
        verdict = verify_profile(a, b, e1, e1)
        assert not verdict.is_exact
        assert verdict.epsilon_approx == pytest.approx(0.25)
        assert verdict.epsilon_well_supported == pytest.approx(0.25)
        assert [d.best_time for d in verdict.worst_deviations] == [2, 2]

    def test_well_supported_exceeds_approx(self, half_matrices):
        """A support time with a poor payoff raises only the well-supported gap."""
        a, b = half_matrices
        x = MixedStrategy.from_weights([F(9, 10), F(1, 10)])
        y = MixedStrategy.pure(1, 2)
        verdict = verify_profile(a, b, x, y)
        assert verdict.epsilon_well_supported >= verdict.epsilon_approx

    def test_dimension_mismatch(self, half_matrices):
        a, b = half_matrices
        x3 = MixedStrategy.pure(1, 3)
        with pytest.raises(DimensionError):
            verify_profile(a, b, x3, x3)

    def test_matrix_free_matches_dense(self, grover_1e3):
        x = MixedStrategy.uniform(range(5, 25), grover_1e3.k)
        y = MixedStrategy.uniform(range(12, 20), grover_1e3.k)
        for variant in Variant:
            dense = (
                payoff_matrix_2p(grover_1e3, grover_1e3, variant, Role.ROW),
                payoff_matrix_2p(grover_1e3, grover_1e3, variant, Role.COLUMN),
            )
            free = race_evaluators(grover_1e3, grover_1e3, variant)
            v_dense = verify_profile(*dense, x, y)
            v_free = verify_profile(*free, x, y)
            assert v_free.epsilon_approx == pytest.approx(v_dense.epsilon_approx, abs=1e-14)
            assert v_free.payoffs == pytest.approx(v_dense.payoffs, abs=1e-14)

    def test_n_player_agrees_with_bimatrix(self, half_one, half_matrices, mixed_third):
        a, b = half_matrices
        cfg = RaceConfig.symmetric(half_one, 2)
        two = verify_profile(a, b, mixed_third, mixed_third)
        many = verify_profile_np(cfg, [mixed_third, mixed_third])
        assert many.is_exact
        assert many.payoffs == pytest.approx(two.payoffs)


class TestMangasarianStone:
    def test_zero_at_equilibrium(self, half_matrices, mixed_third):
        a, b = half_matrices
        assert mangasarian_stone_value(a, b, mixed_third, mixed_third) == 0

    def test_negative_off_equilibrium(self, half_matrices):
        a, b = half_matrices
        e1 = MixedStrategy.pure(1, 2)
        assert mangasarian_stone_value(a, b, e1, e1) == F(-1, 2)


# ---------------------------------------------------------------------------
# Tests: Support enumeration
# ---------------------------------------------------------------------------


class TestSupportEnumeration:
    def test_two_times_race(self, half_matrices):
        """Two pure alternating equilibria and the coinciding mixed one."""
        result = support_enumeration_2p(*half_matrices)
        assert not result.degenerate
        found = {(tuple(eq.row.weights), tuple(eq.col.weights)) for eq in result.equilibria}
        assert found == {
            ((1, 0), (0, 1)),
            ((0, 1), (1, 0)),
            ((F(2, 3), F(1, 3)), (F(2, 3), F(1, 3))),
        }

    def test_size_cap(self):
        square = np.zeros((7, 7))
        with pytest.raises(EnumerationLimitError, match="K <= 6"):
            support_enumeration_2p(square, square)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            support_enumeration_2p(np.zeros((2, 2)), np.zeros((2, 3)))

    @pytest.mark.parametrize("seed", [1, 2, 3, 4])
    def test_random_games_odd_count(self, seed):
        """Generic bimatrix games have an odd number of equilibria, each verified."""
        rng = np.random.default_rng(seed)
        a = rng.uniform(size=(4, 4))
        b = rng.uniform(size=(4, 4))
        result = support_enumeration_2p(a, b)
        assert not result.degenerate
        assert len(result.equilibria) % 2 == 1
        for eq in result.equilibria:
            assert verify_profile(a, b, eq.row, eq.col).is_exact

    def test_tie_splitting_race_verifies(self, quarter_half_one):
        schedule = quarter_half_one
        a = payoff_matrix_2p(schedule, schedule, Variant.TIE_SPLITTING, Role.ROW)
        b = payoff_matrix_2p(schedule, schedule, Variant.TIE_SPLITTING, Role.COLUMN)
        result = support_enumeration_2p(a, b)
        assert result.equilibria
        for eq in result.equilibria:
            assert verify_profile(a, b, eq.row, eq.col).is_exact
