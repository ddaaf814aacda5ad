import math

import numpy as np
import pytest

from distcomp.codes.moddev import COLUMNS, conditional_entropy_x_given_y, moderate_deviation_run
from distcomp.errors import PreconditionError
from distcomp.funclass import SingleLetterFunction, identity_function, lift_symbolwise
from distcomp.sources import SourceModel

AND = SingleLetterFunction.from_array(((0, 0), (0, 1)))


def ident(n):
    return identity_function(n, 2, 2)


@pytest.fixture
def rows(positive_joint):
    return moderate_deviation_run(SourceModel.iid(positive_joint), ident, 0.25, 1.0, [3, 4, 5], seed=0)


def test_schedule(rows):
    for row in rows:
        assert row.beta == pytest.approx(1 / row.n)
        assert row.delta == pytest.approx(row.n ** -0.375)
        assert row.v_n == 0 and row.v_ok


def test_input_length_and_excess(rows, positive_joint):
    h = conditional_entropy_x_given_y(positive_joint)
    for row in rows:
        scale = row.n ** 0.75
        assert row.input_length == math.ceil(row.n * h + scale)
        assert 1.0 <= row.input_excess < 1.0 + 1 / scale + 1e-12


def test_length_and_error_certificates(rows):
    for row in rows:
        assert row.length_ok
        assert row.realized_error <= 1
        assert row.error_bound >= 0
        assert set(row.to_row()) == set(COLUMNS)


def test_overhead_term_is_analytic(rows):
    row = rows[0]
    grown = row.input_length + 2 * row.n * row.delta + 1
    overhead = 2 * row.n * row.delta + 2 + 2 * math.floor(math.log2(grown))
    assert row.o_term == pytest.approx(overhead / row.n ** 0.75)


def test_symbolwise_function_accepted(positive_joint):
    out = moderate_deviation_run(
        SourceModel.iid(positive_joint), lambda n: lift_symbolwise(AND, n), 0.2, 0.5, [3], seed=1
    )
    assert len(out) == 1 and out[0].n == 3


def test_rejections(positive_joint):
    src = SourceModel.iid(positive_joint)
    with pytest.raises(ValueError):
        moderate_deviation_run(src, ident, 0.5, 1.0, [3], 0)
    with pytest.raises(ValueError):
        moderate_deviation_run(src, ident, 0.25, 0.0, [3], 0)
    with pytest.raises(PreconditionError) as info:
        moderate_deviation_run(SourceModel.iid(np.array([[0.5, 0.0], [0.2, 0.3]])), ident, 0.25, 1, [3], 0)
    assert info.value.hypothesis == "positive joint distribution"
    w = np.array([[0.9, 0.1], [0.2, 0.8]])
    markov = SourceModel.markov(2, 1, w, np.array([0.5, 0.5]))
    with pytest.raises(PreconditionError) as info:
        moderate_deviation_run(markov, lambda n: identity_function(n, 2, 1), 0.25, 1, [3], 0)
    assert info.value.hypothesis == "i.i.d. source"
    const = SingleLetterFunction.from_array(((0, 0), (0, 0)))
    with pytest.raises(PreconditionError):
        moderate_deviation_run(src, lambda n: lift_symbolwise(const, n), 0.25, 1, [3], 0)
