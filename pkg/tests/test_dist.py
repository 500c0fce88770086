"""Probability-vector arithmetic: exact cases, frozen oracles, properties.

Frozen constants were computed with an independent 50-digit mpmath oracle
before the implementation existed.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordersmith import (
    LabelDist,
    LabelSpace,
    entropy,
    kl_divergence,
    mean_distribution,
    normalize,
    softmax,
    uniform,
)
from ordersmith.errors import (
    AllZeroError,
    EmptyInputError,
    NegativeWeightError,
    NonFiniteError,
    SpaceMismatchError,
)

SPACE2 = LabelSpace.from_pairs([("a", "alpha"), ("b", "beta")])
SPACE3 = LabelSpace.from_pairs([("a", "alpha"), ("b", "beta"), ("c", "gamma")])
SPACE4 = LabelSpace.from_pairs([("a", "alpha"), ("b", "beta"), ("c", "gamma"), ("d", "delta")])

# mpmath oracle values
SOFTMAX_SYM = (0.844828147187, 0.155171852813)  # softmax(0.8473, -0.8473)
KL_73_UNIF = 0.0822828785051
KL_UNIF4 = 0.121777274287  # KL(unif4 || (0.4, 0.3, 0.2, 0.1))
H_73 = 0.610864302055


def dist(probs, space=None):
    if space is None:
        space = {2: SPACE2, 3: SPACE3, 4: SPACE4}[len(probs)]
    return LabelDist(np.array(probs, dtype=float), space)


def random_dist(rng, space):
    return LabelDist(rng.dirichlet(np.ones(space.size)), space)


class TestLabelSpace:
    def test_size_and_lookup(self):
        assert SPACE3.size == 3
        assert SPACE3.ids == ("a", "b", "c")
        assert SPACE3.verbalizers == ("alpha", "beta", "gamma")
        assert SPACE3.index_of("b") == 1
        assert SPACE3.verbalizer_index("gamma") == 2

    def test_too_small(self):
        with pytest.raises(ValueError):
            LabelSpace.from_pairs([("only", "one")])

    def test_duplicate_ids(self):
        with pytest.raises(ValueError):
            LabelSpace.from_pairs([("a", "x"), ("a", "y")])

    def test_duplicate_verbalizers(self):
        with pytest.raises(ValueError):
            LabelSpace.from_pairs([("a", "x"), ("b", "x")])

    def test_equality_is_content_based(self):
        assert SPACE2 == LabelSpace.from_pairs([("a", "alpha"), ("b", "beta")])


class TestLabelDist:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            dist([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(NegativeWeightError):
            dist([1.1, -0.1])

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            LabelDist(np.array([0.5, 0.5]), SPACE3)

    def test_probs_read_only(self):
        d = dist([0.5, 0.5])
        with pytest.raises(ValueError):
            d.probs[0] = 0.9

    def test_argmax_tie_lowest_index(self):
        assert dist([0.5, 0.5]).argmax() == 0


class TestNormalize:
    def test_symmetry(self):
        assert normalize([1, 1], SPACE2).tolist() == [0.5, 0.5]

    def test_degenerate_mass(self):
        assert normalize([2, 0], SPACE2).tolist() == [1.0, 0.0]

    def test_exact_rationals(self):
        assert normalize([3, 1, 1, 5], SPACE4).tolist() == [0.3, 0.1, 0.1, 0.5]

    def test_all_zero(self):
        with pytest.raises(AllZeroError):
            normalize([0, 0], SPACE2)

    def test_negative(self):
        with pytest.raises(NegativeWeightError):
            normalize([1, -1], SPACE2)


class TestSoftmax:
    def test_equal_scores(self):
        assert np.allclose(softmax([0, 0, 0], SPACE3).probs, 1 / 3, atol=1e-15)

    @pytest.mark.parametrize("c", [0.0, -5.0, 100.0])
    def test_closed_form_shift(self, c):
        got = softmax([c, c + math.log(3)], SPACE2)
        assert np.allclose(got.probs, [0.25, 0.75], atol=1e-12)

    def test_frozen_oracle(self):
        got = softmax([0.8473, -0.8473], SPACE2)
        assert np.allclose(got.probs, SOFTMAX_SYM, atol=1e-9)
        assert np.allclose(got.probs, [0.8448, 0.1552], atol=1e-3)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite(self, bad):
        with pytest.raises(NonFiniteError):
            softmax([0.0, bad], SPACE2)

    @given(st.lists(st.floats(-50, 50), min_size=3, max_size=3),
           st.floats(-100, 100))
    def test_shift_invariance_and_argmax(self, scores, shift):
        base = softmax(scores, SPACE3)
        shifted = softmax([s + shift for s in scores], SPACE3)
        assert np.allclose(base.probs, shifted.probs, atol=1e-12)
        assert base.argmax() == int(np.argmax(scores))


class TestKL:
    def test_identity_is_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = random_dist(rng, SPACE3)
            assert kl_divergence(p, p) == 0.0

    def test_frozen_binary(self):
        got = kl_divergence(dist([0.7, 0.3]), dist([0.5, 0.5]))
        assert got == pytest.approx(KL_73_UNIF, abs=1e-9)
        assert got == pytest.approx(0.08228, abs=1e-4)

    def test_frozen_uniform4(self):
        got = kl_divergence(uniform(SPACE4), dist([0.4, 0.3, 0.2, 0.1]))
        assert got == pytest.approx(KL_UNIF4, abs=1e-9)

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatchError):
            kl_divergence(dist([0.5, 0.5]), uniform(SPACE3))

    def test_zero_numerator_skipped(self):
        assert kl_divergence(dist([1.0, 0.0]), dist([0.5, 0.5])) == pytest.approx(
            math.log(2), abs=1e-12
        )

    def test_zero_denominator_clamped_finite(self):
        got = kl_divergence(dist([0.5, 0.5]), dist([1.0, 0.0]))
        assert math.isfinite(got)
        # 0.5*ln(0.5) + 0.5*ln(0.5/1e-12)
        assert got == pytest.approx(0.5 * math.log(0.5) + 0.5 * math.log(0.5 / 1e-12), rel=1e-9)

    def test_nonnegative_random(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            p, q = random_dist(rng, SPACE4), random_dist(rng, SPACE4)
            assert kl_divergence(p, q) >= 0.0


class TestEntropy:
    def test_deterministic_dist(self):
        assert entropy(dist([1.0, 0.0])) == 0.0

    def test_uniform_closed_form(self):
        assert entropy(uniform(SPACE4)) == pytest.approx(math.log(4), abs=1e-12)

    def test_frozen(self):
        assert entropy(dist([0.7, 0.3])) == pytest.approx(H_73, abs=1e-9)

    def test_identity_with_kl_to_uniform(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            p = random_dist(rng, SPACE4)
            lhs = entropy(p) + kl_divergence(p, uniform(SPACE4))
            assert lhs == pytest.approx(math.log(4), abs=1e-9)


class TestMeanDistribution:
    def test_singleton(self):
        assert mean_distribution([dist([0.6, 0.4])]).tolist() == [0.6, 0.4]

    def test_symmetry(self):
        got = mean_distribution([dist([1.0, 0.0]), dist([0.0, 1.0])])
        assert got.tolist() == [0.5, 0.5]

    def test_exact_mean(self):
        got = mean_distribution([dist([0.9, 0.1]), dist([0.5, 0.5]), dist([0.1, 0.9])])
        assert np.allclose(got.probs, [0.5, 0.5], atol=1e-15)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            mean_distribution([])

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatchError):
            mean_distribution([dist([0.5, 0.5]), uniform(SPACE3)])

    @settings(max_examples=50)
    @given(st.integers(0, 2**31), st.integers(2, 6))
    def test_order_invariant_and_valid(self, seed, n):
        rng = np.random.default_rng(seed)
        dists = [random_dist(rng, SPACE3) for _ in range(n)]
        fwd = mean_distribution(dists)
        rev = mean_distribution(list(reversed(dists)))
        assert np.allclose(fwd.probs, rev.probs, atol=1e-15)
        assert fwd.probs.sum() == pytest.approx(1.0, abs=1e-9)
