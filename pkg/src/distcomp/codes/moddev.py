"""Moderate-deviation scaling of the full-side transformation.

For each block length the schedule is ``beta = 1/n`` and
``delta = n^{-3t/2}``. The input is a random fixed-length bin code for
``x`` with ``ceil(n H(X|Y) + gamma n^{1-t})`` bits and the MAP decoder
given ``y``. The output is the SW code produced by the full-side
transformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..funclass import VectorFunction
from ..regions import entropy
from ..sources import SourceModel
from .binning import build_full_side_sw, random_bin_encoder
from .code import error_probability_exact, map_decoder_code, side_information_encoder
from .lemma import require_sensitive, v_n

COLUMNS = (
    "n", "beta", "delta", "input_length", "input_excess", "expected_length",
    "length_excess", "o_term", "input_error", "error_bound", "error_exponent",
    "realized_error", "v_n", "v_n_limit",
)


@dataclass(frozen=True)
class ScalingRow:
    n: int
    beta: float
    delta: float
    input_length: int
    input_excess: float  # (l - n H) / n^{1-t}
    expected_length: float
    length_excess: float  # (E|code| - n H) / n^{1-t}
    o_term: float  # (2 n delta + rounding + Elias header) / n^{1-t}, analytic
    input_error: float
    error_bound: float
    error_exponent: float  # -log2(bound) / n^{1-2t}
    realized_error: float
    v_n: int
    v_n_limit: int  # 16 |X| n^3

    @property
    def length_ok(self):
        return self.length_excess <= self.input_excess + self.o_term + 1e-9

    @property
    def v_ok(self):
        return self.v_n <= self.v_n_limit

    def to_row(self):
        return {c: getattr(self, c) for c in COLUMNS}


def conditional_entropy_x_given_y(joint):
    joint = np.asarray(joint, dtype=float)
    return entropy(joint.ravel()) - entropy(joint.sum(axis=0))


def moderate_deviation_run(source: SourceModel, fn_for, t, gamma, n_list, seed):
    """One :class:`ScalingRow` per block length.

    ``fn_for(n)`` returns the function at block length ``n`` (a single
    :class:`VectorFunction` is accepted when ``n_list`` has one entry).
    """
    if not 0 < t < 0.5:
        raise ValueError("t must lie in (0, 1/2)")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if source.kind != "iid":
        raise PreconditionError("i.i.d. source", f"got a {source.kind} source")
    if not np.all(source.joint > 0):
        raise PreconditionError("positive joint distribution", "some pair has probability zero")
    h = conditional_entropy_x_given_y(source.joint)
    rows = []
    for n in n_list:
        fn = fn_for(n) if callable(fn_for) and not isinstance(fn_for, VectorFunction) else fn_for
        if fn.n != n:
            raise ValueError(f"function has block length {fn.n}, expected {n}")
        require_sensitive(fn, "Y")
        rows.append(_row(source, fn, t, gamma, n, h, seed))
    return rows


def _row(source, fn, t, gamma, n, h, seed):
    beta = 1.0 / n
    delta = n ** (-1.5 * t)
    scale = n ** (1 - t)
    ell = math.ceil(round(n * h + gamma * scale, 9))
    enc1 = random_bin_encoder(source.x_size, n, ell, seed, 0)
    phi = map_decoder_code(source, fn, enc1, side_information_encoder(n, source.y_size), "input")
    code, _, bound = build_full_side_sw(phi, source, fn, delta, beta, seed)
    px = source.block_table(n).sum(axis=1)
    expected = float(np.dot(px, code.lengths1))
    grown = ell + 2 * n * delta + 1  # adaptive length before rounding, plus rounding
    overhead = 2 * n * delta + 1 + 2 * math.floor(math.log2(grown)) + 1
    rhs = bound.rhs
    return ScalingRow(
        n=n,
        beta=beta,
        delta=delta,
        input_length=ell,
        input_excess=(ell - n * h) / scale,
        expected_length=expected,
        length_excess=(expected - n * h) / scale,
        o_term=overhead / scale,
        input_error=error_probability_exact(phi, source, fn),
        error_bound=rhs,
        error_exponent=-math.log2(rhs) / n ** (1 - 2 * t) if rhs > 0 else math.inf,
        realized_error=bound.components["realized_error"],
        v_n=v_n(n, source.x_size, beta),
        v_n_limit=16 * source.x_size * n**3,
    )
