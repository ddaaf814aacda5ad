import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distcomp import _words
from distcomp.errors import PreconditionError
from distcomp.funclass import SingleLetterFunction, lift_symbolwise
from distcomp.sources import (
    SourceModel,
    anti_diagonal_law,
    certified_q,
    closed_form_q,
    is_weakly_smooth_iid,
    require_smooth,
    smoothness_check,
    two_symbolwise_from_function,
    weak_smoothness_check,
)

from conftest import HK_COUNTEREXAMPLE

MARKOV_W = np.array([
    [0.7, 0.1, 0.1, 0.1],
    [0.1, 0.7, 0.1, 0.1],
    [0.2, 0.2, 0.5, 0.1],
    [0.05, 0.15, 0.1, 0.7],
])
MARKOV_P0 = np.array([0.1, 0.2, 0.3, 0.4])


def positive_tables(max_size=3):
    return st.tuples(st.integers(1, max_size), st.integers(2, max_size)).flatmap(
        lambda s: st.lists(st.floats(0.05, 1.0), min_size=s[0] * s[1], max_size=s[0] * s[1]).map(
            lambda v: (np.array(v) / sum(v)).reshape(s)
        )
    )


def brute_q(table, n, x_size, y_size):
    """Smallest ``P(x, y_hat) / P(x, y)`` over single flips of y, by direct loops."""
    best = math.inf
    for i in range(x_size**n):
        for j in range(y_size**n):
            if table[i, j] <= 0:
                continue
            y = _words.index_to_word(j, y_size, n)
            for pos in range(n):
                for b in range(y_size):
                    if b == y[pos]:
                        continue
                    jj = _words.word_to_index(y[:pos] + (b,) + y[pos + 1:], y_size)
                    best = min(best, table[i, jj] / table[i, j])
    return best


def markov_block_brute(n):
    xs, ys = 2**n, 2**n
    out = np.zeros((xs, ys))
    for x in itertools.product(range(2), repeat=n):
        for y in itertools.product(range(2), repeat=n):
            s = [a * 2 + b for a, b in zip(x, y)]
            p = MARKOV_P0[s[0]]
            for u, v in zip(s, s[1:]):
                p *= MARKOV_W[u, v]
            out[_words.word_to_index(x, 2), _words.word_to_index(y, 2)] = p
    return out


# ---------------------------------------------------------------- models


def test_anti_diagonal_law_values():
    q = anti_diagonal_law(2, 2, 0.1)
    assert q[0, 1] == pytest.approx(0.45) and q[1, 0] == pytest.approx(0.45)
    assert q[0, 0] == pytest.approx(0.05) and q.sum() == pytest.approx(1)


def test_iid_block_table_is_kronecker(positive_joint):
    src = SourceModel.iid(positive_joint)
    t = src.block_table(2)
    assert t[_words.word_to_index((1, 0), 2), _words.word_to_index((0, 1), 2)] == pytest.approx(
        positive_joint[1, 0] * positive_joint[0, 1]
    )
    assert t.sum() == pytest.approx(1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_markov_block_table_matches_chain_product(n):
    src = SourceModel.markov(2, 2, MARKOV_W, MARKOV_P0)
    np.testing.assert_allclose(src.block_table(n), markov_block_brute(n), atol=1e-15)


@pytest.mark.parametrize("kind", ["iid", "markov", "mixture", "two_symbolwise"])
def test_log_marginals_match_table(kind, positive_joint):
    src = {
        "iid": SourceModel.iid(positive_joint),
        "markov": SourceModel.markov(2, 2, MARKOV_W, MARKOV_P0),
        "mixture": SourceModel.mixture(
            [SourceModel.iid(positive_joint), SourceModel.iid(np.full((2, 2), 0.25))], [0.3, 0.7]
        ),
        "two_symbolwise": SourceModel.two_symbolwise(2, 2, np.full((4, 4), 1 / 16)),
    }[kind]
    n = 2
    t = src.block_table(n)
    words = _words.all_words(2, n)
    np.testing.assert_allclose(src.log2_marginal(words, "X"), np.log2(t.sum(axis=1)))
    np.testing.assert_allclose(src.log2_marginal(words, "Y"), np.log2(t.sum(axis=0)))
    xs = np.repeat(words, len(words), axis=0)
    ys = np.tile(words, (len(words), 1))
    np.testing.assert_allclose(src.log2_joint(xs, ys), np.log2(t.ravel()))


def test_two_symbolwise_needs_even_length():
    src = SourceModel.two_symbolwise(2, 2, np.full((4, 4), 1 / 16))
    with pytest.raises(ValueError):
        src.block_table(3)


def test_sampling_frequencies(positive_joint):
    src = SourceModel.iid(positive_joint)
    xs, ys = src.sample(3, 20000, np.random.default_rng(0))
    counts = np.zeros((2, 2))
    np.add.at(counts, (xs.ravel(), ys.ravel()), 1)
    np.testing.assert_allclose(counts / counts.sum(), positive_joint, atol=0.01)


def test_normalization_checked():
    with pytest.raises(ValueError):
        SourceModel.iid([[0.5, 0.4], [0.0, 0.0]])
    with pytest.raises(ValueError):
        SourceModel.iid([[1.1, -0.1]])


# ---------------------------------------------------------------- smoothness


def test_symmetric_table_q():
    src = SourceModel.iid([[0.4, 0.1], [0.1, 0.4]])
    assert certified_q(src, 2, "Y") == pytest.approx(0.25)
    assert closed_form_q(src, "Y") == pytest.approx(0.25)


@given(positive_tables(), st.integers(1, 3))
def test_iid_certified_q_matches_brute_force_and_closed_form(joint, n):
    src = SourceModel.iid(joint)
    q = certified_q(src, n, "Y")
    assert q == pytest.approx(brute_q(src.block_table(n), n, *joint.shape))
    assert q == pytest.approx(closed_form_q(src, "Y"))
    assert 0 < q <= 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_markov_closed_form_is_a_lower_bound(n):
    src = SourceModel.markov(2, 2, MARKOV_W, MARKOV_P0)
    for wrt in ("X", "Y"):
        assert 0 < closed_form_q(src, wrt) <= certified_q(src, n, wrt) + 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mixture_closed_form_is_a_lower_bound(n):
    comps = [SourceModel.iid([[0.4, 0.1], [0.1, 0.4]]), SourceModel.iid(np.full((2, 2), 0.25))]
    src = SourceModel.mixture(comps, [0.5, 0.5])
    assert closed_form_q(src, "Y") == pytest.approx(0.25)
    assert closed_form_q(src, "Y") <= certified_q(src, n, "Y") + 1e-12


def test_zero_entries_are_not_smooth():
    src = SourceModel.iid([[0.5, 0.0], [0.0, 0.5]])
    v = smoothness_check(src, 2)
    assert v.q_Y == 0 and not v.smooth_wrt_Y
    with pytest.raises(PreconditionError) as info:
        require_smooth(src, 2, "Y")
    assert "smooth" in info.value.hypothesis


def test_weak_smoothness_on_diagonal_table():
    ok, _ = is_weakly_smooth_iid(np.array([[0.5, 0.0], [0.0, 0.5]]))
    assert ok
    q, witness = weak_smoothness_check(SourceModel.iid([[0.5, 0.0], [0.0, 0.5]]), 2)
    assert q > 0 and witness is None


def test_weak_smoothness_failure_witness():
    joint = np.array([[0.3, 0.2], [0.0, 0.5]])
    ok, (a1, a2, b) = is_weakly_smooth_iid(joint)
    assert not ok and joint[a1, b] > 0
    q, witness = weak_smoothness_check(SourceModel.iid(joint), 2)
    assert q == 0 and witness is not None


@given(positive_tables(2), st.integers(1, 3))
def test_smooth_implies_weakly_smooth(joint, n):
    v = smoothness_check(SourceModel.iid(joint), n)
    assert v.weakly_smooth_wrt_Y and v.weak_q_Y >= v.q_Y - 1e-12


def test_modulo_sum_source_q():
    src = SourceModel.theorem9(2, 2, 1.0, 0.1)
    assert closed_form_q(src, "Y") == pytest.approx(min(0.05 / 0.45, 1))
    assert certified_q(src, 2, "Y") == pytest.approx(0.05 / 0.45)


# ---------------------------------------------------------------- pair-symbol sources


def test_template_for_hk_counterexample():
    f = SingleLetterFunction.from_array(HK_COUNTEREXAMPLE)
    t = two_symbolwise_from_function(f)
    assert t.super_shape == (4, 9)
    assert t.breaks_hk_diagonal
    f2 = lift_symbolwise(f, 2)
    x, xh, y, yh = t.quadruple
    assert f2.evaluate(x, y) == f2.evaluate(xh, yh)
