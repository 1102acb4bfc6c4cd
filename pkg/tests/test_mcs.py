"""Model confidence sets over loss-differential bootstraps."""

import numpy as np
import pytest

from hdcoint import DataError, ParameterError, mcs


def _losses(rng, n=100, spread=0.0):
    base = rng.standard_normal(n) ** 2
    a = base + rng.standard_normal(n) * 0.1
    b = base + rng.standard_normal(n) * 0.1 + spread
    return np.column_stack([a, b])


class TestStructure:
    def test_identical_losses_keep_everyone(self, rng):
        col = rng.standard_normal(80) ** 2
        out = mcs(np.column_stack([col, col, col]), alpha=0.10, reps=199)
        assert out.members == ("m1", "m2", "m3")
        assert all(p == 1.0 for p in out.pvalues.values())

    def test_dominated_method_is_eliminated(self, rng):
        losses = _losses(rng, n=200, spread=5.0)
        out = mcs(losses, alpha=0.10, reps=199, names=["good", "bad"])
        assert out.members == ("good",)
        assert out.eliminated[0] == "bad"

    def test_best_method_survives_any_level(self, rng):
        losses = _losses(rng, n=150, spread=1.0)
        for alpha in (0.01, 0.10, 0.40):
            out = mcs(losses, alpha=alpha, reps=199, names=["good", "bad"])
            assert "good" in out.members
            assert out.pvalues["good"] == 1.0

    def test_membership_monotone_in_alpha(self, rng):
        losses = np.column_stack([_losses(rng, n=120, spread=0.3),
                                  rng.standard_normal(120) ** 2])
        sets = []
        for alpha in (0.40, 0.10, 0.01):
            out = mcs(losses, alpha=alpha, reps=199, seed=3)
            sets.append(set(out.members))
        assert sets[0] <= sets[1] <= sets[2]

    def test_full_elimination_order_recorded(self, rng):
        losses = _losses(rng, n=100, spread=2.0)
        out = mcs(losses, alpha=0.10, reps=199)
        assert len(out.eliminated) == len(out.names) - 1
        survivor, = set(out.names) - set(out.eliminated)
        assert survivor in out.members
        assert out.pvalues[survivor] == 1.0

    def test_contains_protocol(self, rng):
        out = mcs(_losses(rng, n=100), alpha=0.10, reps=199,
                  names=["x", "y"])
        for name in out.members:
            assert name in out

    def test_determinism_by_seed(self, rng):
        losses = _losses(rng, n=90, spread=0.2)
        a = mcs(losses, reps=199, seed=11)
        b = mcs(losses, reps=199, seed=11)
        assert a.pvalues == b.pvalues
        assert a.members == b.members


class TestValidation:
    def test_needs_two_methods(self, rng):
        with pytest.raises(ParameterError):
            mcs(rng.standard_normal((50, 1)) ** 2)

    def test_needs_thirty_rows(self, rng):
        with pytest.raises(DataError):
            mcs(rng.standard_normal((20, 2)) ** 2, reps=199)

    def test_rejects_non_finite(self, rng):
        losses = rng.standard_normal((60, 2)) ** 2
        losses[5, 1] = np.nan
        with pytest.raises(DataError):
            mcs(losses, reps=199)

    def test_alpha_domain(self, rng):
        with pytest.raises(ParameterError):
            mcs(rng.standard_normal((60, 2)) ** 2, alpha=0.0, reps=199)


class TestCoverage:
    def test_equal_quality_streams_usually_both_retained(self):
        rng = np.random.default_rng(7)
        both = 0
        reps = 60
        for _ in range(reps):
            common = rng.standard_normal(100) ** 2
            losses = np.column_stack([
                common + 0.2 * rng.standard_normal(100),
                common + 0.2 * rng.standard_normal(100)])
            out = mcs(losses, alpha=0.10, reps=199,
                      seed=int(rng.integers(1 << 30)))
            both += len(out.members) == 2
        # nominal retention 90%; allow wide MC slack at 60 reps
        assert both / reps >= 0.80
