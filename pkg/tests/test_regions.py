import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distcomp.errors import PreconditionError
from distcomp.regions import (
    RateRegion,
    binary_entropy,
    empirical_spectrum,
    entropy,
    epsilon_for_noise,
    iid_spectrum_quantile,
    markov_entropy_rate,
    noise_entropy_bound,
    observed_entropy_rate,
    outer_bound_r_sensitive,
    spectral_entropies,
    stationary_distribution,
    sw_rate_full_side,
    sw_region_fl,
    sw_region_vl,
    theorem9_regions,
)
from distcomp.sources import SourceModel

from test_sources import MARKOV_W


def block_entropy(table):
    p = table[table > 0]
    return float(-(p * np.log2(p)).sum())


def stationary_markov():
    return SourceModel.markov(2, 2, MARKOV_W, stationary_distribution(MARKOV_W))


# ---------------------------------------------------------------- entropies


def test_entropy_values():
    assert entropy([0.5, 0.5]) == pytest.approx(1)
    assert entropy([1.0, 0.0]) == 0
    assert binary_entropy(0.11) == pytest.approx(0.499915958, abs=1e-8)


def test_iid_spectral_entropies_are_shannon(positive_joint):
    e = spectral_entropies(SourceModel.iid(positive_joint))
    hj = entropy(positive_joint.ravel())
    assert e.h_joint == pytest.approx(hj)
    assert e.h_x_given_y == pytest.approx(hj - entropy(positive_joint.sum(axis=0)))
    assert e.h_y_given_x == pytest.approx(hj - entropy(positive_joint.sum(axis=1)))


def test_markov_joint_rate_matches_block_increments():
    src = stationary_markov()
    inc = block_entropy(src.block_table(6)) - block_entropy(src.block_table(5))
    assert markov_entropy_rate(MARKOV_W) == pytest.approx(inc, abs=1e-12)


def test_observed_rate_bounds_bracket_block_estimates():
    src = stationary_markov()
    lower, upper = observed_entropy_rate(src, "Y")
    assert lower <= upper and upper - lower < 1e-6
    t6, t5 = src.block_table(6).sum(axis=0), src.block_table(5).sum(axis=0)
    increment = block_entropy(t6) - block_entropy(t5)  # H(Y_6 | Y^5) >= rate
    assert increment >= lower - 1e-9
    assert increment - upper < 0.05


def test_markov_conditional_entropies():
    src = stationary_markov()
    e = spectral_entropies(src)
    assert e.method == "markov-rate" and e.tolerance < 1e-6
    assert 0 < e.h_x_given_y < e.h_joint
    assert sw_region_vl(src) is None


def test_mixture_takes_worst_component(positive_joint):
    a, b = SourceModel.iid(positive_joint), SourceModel.iid(np.full((2, 2), 0.25))
    e = spectral_entropies(SourceModel.mixture([a, b], [0.9, 0.1]))
    assert e.h_joint == pytest.approx(2.0)


def brute_quantile(joint, n, level):
    src = SourceModel.iid(joint)
    t = src.block_table(n)
    px, py = t.sum(axis=1), t.sum(axis=0)
    mask = t > 0
    vals = [
        -np.log2(t[mask]) / n,
        -np.log2((t / py[None, :])[mask]) / n,
        -np.log2((t / px[:, None])[mask]) / n,
    ]
    w = t[mask]
    out = []
    for v in vals:
        order = np.argsort(v, kind="stable")
        cum = np.cumsum(w[order])
        k = int(np.searchsorted(cum, level - 1e-12))
        out.append(float(v[order][k]))
    return out


@pytest.mark.parametrize("n, level", [(3, 0.5), (4, 0.9), (5, 0.999)])
def test_type_quantile_matches_enumeration(positive_joint, n, level):
    exact = iid_spectrum_quantile(positive_joint, n, level)
    np.testing.assert_allclose(exact, brute_quantile(positive_joint, n, level), atol=1e-9)


def test_empirical_quantile_within_dkw_band(positive_joint):
    n, level, samples = 14, 0.9, 40000
    band = math.sqrt(math.log(2 / 1e-3) / (2 * samples))
    emp = empirical_spectrum(SourceModel.iid(positive_joint), n, samples, seed=3, level=level)
    lo = iid_spectrum_quantile(positive_joint, n, level - band)
    hi = iid_spectrum_quantile(positive_joint, n, level + band)
    for value, a, b in zip((emp.h_joint, emp.h_x_given_y, emp.h_y_given_x), lo, hi):
        assert a - 1e-9 <= value <= b + 1e-9


# ---------------------------------------------------------------- regions


finite = st.floats(0, 3)


@given(finite, finite, finite)
def test_region_canonical_and_corners(a, b, s):
    reg = RateRegion(a, b, s)
    c = reg.canonical()
    assert c.canonical() == c
    assert reg.equals(c)
    for p in reg.corners():
        assert reg.contains(p)
    assert reg.includes(reg)


@given(finite, finite, finite, st.floats(0, 1))
def test_shrinking_constraints_enlarges_region(a, b, s, d):
    small = RateRegion(a + d, b, s + d)
    big = RateRegion(a, b, s)
    assert big.includes(small)


def test_sw_regions(positive_joint):
    src = SourceModel.iid(positive_joint)
    e = spectral_entropies(src)
    fl = sw_region_fl(src)
    assert (fl.r1_min, fl.r2_min, fl.sum_min) == (e.h_x_given_y, e.h_y_given_x, e.h_joint)
    assert sw_region_vl(src).equals(fl)
    assert sw_rate_full_side(src) == pytest.approx(e.h_x_given_y)


@given(st.floats(0, 1.5))
def test_outer_bound_contains_sw_region(r):
    e = spectral_entropies(SourceModel.iid(np.array([[0.4, 0.1], [0.15, 0.35]])))
    outer = outer_bound_r_sensitive(e, r)
    assert outer.includes(RateRegion(e.h_x_given_y, e.h_y_given_x, e.h_joint))
    assert outer_bound_r_sensitive(e, 0).equals(RateRegion(e.h_x_given_y, e.h_y_given_x, e.h_joint))


# ---------------------------------------------------------------- modulo-sum regions


def test_noise_level_for_target():
    eps = epsilon_for_noise(2, 2, 0.1)
    assert noise_entropy_bound(2, 2, eps) == pytest.approx(0.1, abs=1e-9)
    assert eps == pytest.approx(0.011220, abs=1e-6)


def test_modulo_sum_regions_at_admitted_noise():
    eps = epsilon_for_noise(2, 2, 0.1)
    regs = theorem9_regions(2, 2, 1.0, 0.1, eps)
    assert (regs.inner.r1_min, regs.inner.r2_min, regs.inner.sum_min) == pytest.approx((0.1, 0.1, 0.2))
    assert (regs.outer.r1_min, regs.outer.r2_min, regs.outer.sum_min) == pytest.approx((0, 0, 0.9))
    assert regs.gap == pytest.approx(0.7)


def test_modulo_sum_regions_refuse_large_noise():
    eps = 0.012987  # binary entropy 0.1, but the full noise bound is larger
    with pytest.raises(PreconditionError) as info:
        theorem9_regions(2, 2, 1.0, 0.1, eps)
    assert info.value.hypothesis == "small anti-diagonal noise"


def test_modulo_sum_regions_partial_rho():
    regs = theorem9_regions(2, 4, 0.5, 0.05, 0.0)
    assert regs.rho == pytest.approx(0.5)
    assert regs.inner.r1_min == pytest.approx(0.05 + 0.5)
    assert regs.inner.r2_min == pytest.approx(0.05 + 1.0)
