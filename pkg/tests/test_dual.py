"""Tests for the closed-form dual certificates of the tie-splitting race."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qrace.engine import constants
from qrace.engine.dual import (
    dual_certificate,
    dual_sweep,
    helper_sum_check,
    payoff_ceiling,
    primal_value,
    tail_sum,
    transpose_product,
    weak_duality_check,
)
from qrace.engine.errors import PreconditionError
from qrace.engine.payoff import MixedStrategy, Role, Variant, payoff_matrix_2p
from qrace.engine.reports import Verdict
from qrace.engine.solve2 import symmetric_equilibrium

# ---------------------------------------------------------------------------
# Tests: Building blocks
# ---------------------------------------------------------------------------


class TestBuildingBlocks:
    def test_tail_sum(self, grover_1e3):
        p = grover_1e3.array
        direct = sum((1 / p[i]) * (1 / p[i] - 1 / p[i + 1]) for i in range(4, len(p) - 1))
        assert tail_sum(p, 5) == pytest.approx(direct, rel=1e-13)

    def test_tail_sum_empty_at_k(self, grover_1e3):
        assert tail_sum(grover_1e3.array, grover_1e3.k) == 0.0

    def test_transpose_product_matches_dense(self, grover_1e3):
        a = payoff_matrix_2p(grover_1e3, grover_1e3, Variant.TIE_SPLITTING, Role.ROW)
        v = np.random.default_rng(7).uniform(size=grover_1e3.k)
        np.testing.assert_allclose(
            transpose_product(grover_1e3.array, v), a.entries.T @ v, rtol=1e-12
        )

    def test_primal_value_matches_dense(self, grover_1e3):
        a = payoff_matrix_2p(grover_1e3, grover_1e3, Variant.TIE_SPLITTING, Role.ROW).entries
        x = MixedStrategy.uniform(range(8, 25), grover_1e3.k)
        dense = x.array @ (a + a.T) @ x.array / 2
        assert primal_value(grover_1e3, x) == pytest.approx(dense, rel=1e-12)


# ---------------------------------------------------------------------------
# Tests: Certificates
# ---------------------------------------------------------------------------


class TestDualCertificate:
    def test_trivial_above_half(self, grover_1e4):
        cert = dual_certificate(grover_1e4, 0.6)
        assert cert.trivial
        assert cert.objective == 0.5
        assert cert.certifies
        assert not cert.v.any()

    def test_below_floor_rejected(self, grover_1e4):
        with pytest.raises(PreconditionError, match="below sqrt"):
            dual_certificate(grover_1e4, 0.4)

    def test_shape(self, grover_1e6):
        """v vanishes before S and at K; the constraint is tight on [S, K]."""
        cert = dual_certificate(grover_1e6, 0.45)
        assert cert.feasible
        assert not cert.trivial
        assert grover_1e6.p(cert.s) >= 0.45 > grover_1e6.p(cert.s - 1)
        assert np.all(cert.v >= 0)
        assert not cert.v[: cert.s - 1].any()
        assert cert.v[-1] == 0.0
        assert abs(cert.worst_slack) < 1e-9

    @pytest.mark.parametrize("c", [0.42, 0.45, 0.49])
    def test_objective_identity(self, grover_1e6, c):
        """With lambda = beta <= 1 the objective is beta - beta^2 / 2."""
        cert = dual_certificate(grover_1e6, c)
        assert cert.beta <= 1.0
        assert cert.objective == pytest.approx(cert.beta - cert.beta**2 / 2, abs=1e-12)


# ---------------------------------------------------------------------------
# Tests: Payoff ceiling
# ---------------------------------------------------------------------------


class TestPayoffCeiling:
    def test_nontrivial_for_large_race(self, grover_race):
        """N = 1e8 puts the ceiling below 1/2, where the certificate does real work."""
        schedule = grover_race(10**8)
        result = payoff_ceiling(schedule)
        assert result.report.holds
        assert result.ceiling < 0.5
        assert not result.certificate.trivial
        assert result.certificate.certifies
        payoff = float(symmetric_equilibrium(schedule).payoff_row)
        assert payoff <= result.ceiling

    def test_trivial_for_mid_race(self, grover_1e6):
        result = payoff_ceiling(grover_1e6)
        assert result.ceiling > 0.5
        assert result.certificate.trivial
        assert result.report.holds

    def test_small_race_inapplicable(self, half_one):
        result = payoff_ceiling(half_one)
        assert result.ceiling is None
        assert result.certificate is None
        assert len(result.report.inapplicable) == 3

    def test_helper_sum(self, grover_1e5):
        report = helper_sum_check(grover_1e5)
        assert report.holds
        check = report.get("helper_sum")
        assert check.verdict == Verdict.HOLDS
        assert 0 < check.value <= check.bound


# ---------------------------------------------------------------------------
# Tests: Sweeps and weak duality
# ---------------------------------------------------------------------------


class TestSweep:
    def test_grid(self, grover_1e6):
        sweep = dual_sweep(grover_1e6, points=20)
        assert len(sweep.points) == 20
        assert sweep.points[0].c == pytest.approx(constants.SQRT2_MINUS_1)
        assert sweep.points[-1].c == pytest.approx(0.5)
        assert sweep.points[0].beta_limit == pytest.approx(2 - math.sqrt(2))

    def test_certifies_below_beta_limit(self, grover_1e6):
        """A nontrivial point certifies exactly when beta < 1 - sqrt(1 - 2c)."""
        for point in dual_sweep(grover_1e6, points=20).points:
            if abs(point.beta - point.beta_limit) < 1e-9:
                continue
            assert point.certifies == (point.beta < point.beta_limit)

    def test_smallest_certified_is_suffix(self, grover_1e6):
        sweep = dual_sweep(grover_1e6, points=20)
        smallest = sweep.smallest_certified
        if smallest is None:
            assert not sweep.points[-1].certifies
        else:
            assert all(p.certifies for p in sweep.points if p.c >= smallest)


class TestWeakDuality:
    def test_holds_on_samples(self, grover_1e6):
        cert = dual_certificate(grover_1e6, 0.45)
        check = weak_duality_check(cert, grover_1e6, draws=16)
        assert check.holds
        assert check.feasible_samples >= 1
        assert check.feasible_samples + check.skipped_samples == 18

    def test_explicit_samples(self, grover_1e4):
        cert = dual_certificate(grover_1e4, 0.6)
        samples = [MixedStrategy.pure(t, grover_1e4.k) for t in (1, 40, 78)]
        check = weak_duality_check(cert, grover_1e4, samples=samples)
        assert check.holds
        assert check.feasible_samples + check.skipped_samples == 3
