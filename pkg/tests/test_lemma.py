import math

import numpy as np
import pytest

from distcomp.codes.binning import random_bin_encoder
from distcomp.codes.code import map_decoder_code, side_information_encoder
from distcomp.codes.lemma import (
    TypicalSetConfig,
    distance_limit,
    lemma1_check,
    pairing_audit,
    pairing_construction,
    positive_floor,
    typical_masses,
    u_n,
    v_n,
    v_n_bound,
    weak_mode_pairing,
)
from distcomp.errors import PreconditionError
from distcomp.funclass import SingleLetterFunction, identity_function, lift_symbolwise
from distcomp.sources import SourceModel
from distcomp._words import all_words, hamming

AND = SingleLetterFunction.from_array(((0, 0), (0, 1)))


def bin_code(src, fn, bits, seed):
    n = fn.n
    return map_decoder_code(
        src, fn, random_bin_encoder(2, n, bits, seed, 1), random_bin_encoder(2, n, bits, seed, 2)
    )


def side_code(src, fn, bits, seed):
    n = fn.n
    return map_decoder_code(src, fn, random_bin_encoder(2, n, bits, seed, 1), side_information_encoder(n, 2))


# ---------------------------------------------------------------- counting


def test_ball_counts():
    assert v_n(4, 2, 0.3) == 4
    assert u_n(5, 3, 0.5) == 2 * 5 + 4 * 10
    assert distance_limit(10, 0.3) == 3  # 10 * 0.3 is 3.0000000000000004 in floating point


@pytest.mark.parametrize("n", range(2, 12))
def test_ball_count_below_closed_form(n):
    for beta in (0.1, 0.25, 0.45):
        assert v_n(n, 3, beta) <= v_n_bound(n, 3, beta)
    assert v_n(n, 2, 1 / n) == 0 <= 16 * 2 * n**3


def test_positive_floor():
    assert positive_floor(0.99) == 0 and positive_floor(2.7) == 2


def test_config_validates():
    with pytest.raises(ValueError):
        TypicalSetConfig(0, 0.2)
    with pytest.raises(ValueError):
        TypicalSetConfig(0.1, 0.5)


# ---------------------------------------------------------------- bounds


@pytest.mark.parametrize("n, bits, seed", [(2, 1, 0), (3, 1, 1), (3, 2, 2), (3, 2, 7)])
def test_bounds_hold_for_random_codes(positive_joint, n, bits, seed):
    src = SourceModel.iid(positive_joint)
    fn = lift_symbolwise(AND, n)
    reports = lemma1_check(bin_code(src, fn, bits, seed), src, fn, TypicalSetConfig(0.2, 0.3), r=1.0)
    assert {"core1", "core2", "core3modified"} <= set(reports)
    for rep in reports.values():
        assert rep.slack >= -1e-9, rep


@pytest.mark.parametrize("bits, seed", [(1, 0), (2, 3)])
def test_joint_bound_holds_for_identity(positive_joint, bits, seed):
    src = SourceModel.iid(positive_joint)
    fn = identity_function(3, 2, 2)
    reports = lemma1_check(bin_code(src, fn, bits, seed), src, fn, TypicalSetConfig(0.2, 0.3))
    assert reports["core3"].slack >= -1e-9


def test_bounds_refuse_insensitive_function(positive_joint):
    src = SourceModel.iid(positive_joint)
    const = lift_symbolwise(SingleLetterFunction.from_array(((0, 0), (0, 0))), 2)
    with pytest.raises(PreconditionError) as info:
        lemma1_check(bin_code(src, const, 1, 0), src, const, TypicalSetConfig(0.2, 0.3))
    assert info.value.hypothesis == "sensitivity conditioned on X or Y"


def test_bounds_refuse_non_smooth_source():
    src = SourceModel.iid(np.array([[0.5, 0.0], [0.0, 0.5]]))
    fn = lift_symbolwise(AND, 2)
    with pytest.raises(PreconditionError) as info:
        lemma1_check(bin_code(src, fn, 1, 0), src, fn, TypicalSetConfig(0.2, 0.3))
    assert "smoothness" in info.value.hypothesis


def test_typical_mass_certificates(positive_joint):
    src = SourceModel.iid(positive_joint)
    fn = lift_symbolwise(AND, 3)
    out = typical_masses(bin_code(src, fn, 2, 3), src, TypicalSetConfig(0.15, 0.3))
    for key in ("S1_count_slack", "S2_count_slack", "S_count_slack"):
        assert out[key] >= 0
    assert out["union"] <= out["T1c"] + out["T2c"] + out["T0c"] + 1e-12


# ---------------------------------------------------------------- pairing


@pytest.mark.parametrize("n, seed", [(3, 0), (3, 5), (4, 1)])
def test_pairing_transcripts(positive_joint, n, seed):
    src = SourceModel.iid(positive_joint)
    fn = lift_symbolwise(AND, n)
    code = side_code(src, fn, n - 1, seed)
    beta = 0.3
    audit = pairing_audit(code, src, fn, beta)
    assert audit.ok
    dmin = distance_limit(n, beta)
    for tr in audit.transcripts:
        y = tr.y
        for step in tr.steps:
            assert hamming(step.x_first, step.x_second) >= dmin
            # both members of a pair are decoded correctly from one codeword, so they share a value
            assert fn(step.x_first, y) == fn(step.x_second, y)
            for star, y_flip, pos in step.witnesses:
                assert hamming(y, y_flip) == 1 and y[pos - 1] != y_flip[pos - 1]
                assert fn(step.x_first, y_flip) != fn(step.x_second, y_flip)


def test_single_cell_pairing_matches_audit(positive_joint):
    src = SourceModel.iid(positive_joint)
    fn = lift_symbolwise(AND, 3)
    code = side_code(src, fn, 1, 2)
    a = code.enc1[0]
    y = all_words(2, 3)[0]
    tr = pairing_construction(code, src, fn, a, y, 0.3)
    assert tr.ok and tr.codeword == a and tuple(tr.y) == tuple(y)
    assert len(tr.steps) >= tr.guaranteed_pairs


def test_weak_mode_pairing(positive_joint):
    src = SourceModel.iid(positive_joint)
    fn = lift_symbolwise(AND, 3)
    code = side_code(src, fn, 1, 4)
    tr = weak_mode_pairing(code, src, fn, code.enc1[0], all_words(2, 3)[0], 0.3)
    assert tr.ok and tr.q > 0
    assert pairing_audit(code, src, fn, 0.3, weak=True).ok


def test_weak_mode_skips_zero_probability_pairs():
    # x is hidden when y = 0; any flip of y reveals it
    reveal = SingleLetterFunction.from_array(((0, 0, 0), (0, 1, 1)))
    src = SourceModel.iid(np.array([[0.3, 0.2, 0.1], [0.2, 0.0, 0.2]]))
    fn = lift_symbolwise(reveal, 2)
    code = map_decoder_code(src, fn, random_bin_encoder(2, 2, 0, 0, 1), side_information_encoder(2, 3))
    audit = pairing_audit(code, src, fn, 0.3, weak=True)
    for tr in audit.transcripts:
        for step in tr.steps:
            if step.witnesses:
                assert step.min_witness_prob > 0


def test_strong_pairing_refuses_non_smooth_source():
    src = SourceModel.iid(np.array([[0.5, 0.0], [0.0, 0.5]]))
    fn = lift_symbolwise(AND, 2)
    with pytest.raises(PreconditionError):
        pairing_audit(side_code(src, fn, 1, 0), src, fn, 0.3)


def test_pairing_refuses_insensitive_function(positive_joint):
    src = SourceModel.iid(positive_joint)
    dull = lift_symbolwise(SingleLetterFunction.from_array(((0, 1), (0, 1))), 2)
    with pytest.raises(PreconditionError) as info:
        pairing_audit(side_code(src, dull, 1, 0), src, dull, 0.3)
    assert info.value.hypothesis == "sensitivity conditioned on Y"
    assert math.isfinite(v_n(2, 2, 0.3))
