"""Spectral entropies, Slepian-Wolf regions and the bounds built from them.

All rates are in bits per symbol.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionError, check_budget
from .sources import SourceModel

TOL = 1e-9


def entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(e) -> float:
    if e <= 0 or e >= 1:
        return 0.0
    return -e * math.log2(e) - (1 - e) * math.log2(1 - e)


def _shannon(joint):
    joint = np.asarray(joint, dtype=float)
    hj = entropy(joint)
    return hj, hj - entropy(joint.sum(axis=0)), hj - entropy(joint.sum(axis=1))


# --------------------------------------------------------------------------
# spectral quantities


@dataclass(frozen=True)
class SpectralEntropies:
    h_joint: float
    h_x_given_y: float
    h_y_given_x: float
    method: str
    tolerance: float = 0.0

    def to_dict(self):
        return {
            "h_joint": self.h_joint,
            "h_x_given_y": self.h_x_given_y,
            "h_y_given_x": self.h_y_given_x,
            "method": self.method,
            "tolerance": self.tolerance,
        }


def stationary_distribution(w) -> np.ndarray:
    """Left eigenvector of ``w`` for eigenvalue 1, normalised."""
    w = np.asarray(w, dtype=float)
    vals, vecs = np.linalg.eig(w.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, k])
    pi = np.abs(pi) / np.abs(pi).sum()
    return pi


def markov_entropy_rate(w, pi=None) -> float:
    """``sum_s pi(s) H(W(.|s))`` for a stationary chain."""
    w = np.asarray(w, dtype=float)
    if pi is None:
        pi = stationary_distribution(w)
    return float(sum(p * entropy(row) for p, row in zip(pi, w)))


def observed_entropy_rate(source: SourceModel, side="Y", tol=1e-10, max_entries=2**20):
    """Entropy rate of one coordinate of a stationary pair chain.

    Uses the bounds ``H(Y_k | Y^{k-1}, S_1) <= H_Y <= H(Y_k | Y^{k-1})``
    and grows ``k`` until they meet within ``tol`` or the table of
    forward vectors would exceed ``max_entries``. Returns
    ``(lower, upper)``.
    """
    xs, ys = source.x_size, source.y_size
    w4 = source.transition.reshape(xs, ys, xs, ys)
    pi = stationary_distribution(source.transition).reshape(xs, ys)
    if side == "X":
        w4 = w4.transpose(1, 0, 3, 2)
        pi = pi.T
        xs, ys = ys, xs
    s = xs * ys
    # fwd[y^k, h]  = P(Y^k = y^k, H_k = h); cond[s1, y^k, h] same given S_1 = s1
    fwd = pi.T.copy()  # (ys, xs)
    cond = np.zeros((s, ys, xs))
    for h in range(xs):
        for o in range(ys):
            cond[h * ys + o, o, h] = 1.0
    step = w4  # [h, o, h', o']
    h_prev, hc_prev = 0.0, 0.0
    lower, upper = 0.0, math.log2(ys) if ys > 1 else 0.0
    pi_s = pi.ravel()
    while True:
        h_k = entropy(fwd.sum(axis=1))
        hc_k = sum(pi_s[a] * entropy(cond[a].sum(axis=1)) for a in range(s) if pi_s[a] > 0)
        upper = min(upper, h_k - h_prev) if h_prev else h_k
        lower = max(lower, hc_k - hc_prev)
        if upper - lower < tol or fwd.size * ys * (s + 1) > max_entries:
            return lower, max(upper, lower)
        h_prev, hc_prev = h_k, hc_k
        fwd = _extend(fwd, step, ys)
        cond = np.stack([_extend(c, step, ys) for c in cond])


def _extend(fwd, step, ys):
    # rows of fwd are words y^k (last symbol = row % ys)
    last = np.arange(fwd.shape[0]) % ys
    # trans[r, h, h', o'] = step[h, last[r], h', o']
    trans = step[:, last].transpose(1, 0, 2, 3)
    new = np.einsum("rh,rhko->rok", fwd, trans)
    return new.reshape(fwd.shape[0] * ys, -1)


def spectral_entropies(source: SourceModel) -> SpectralEntropies:
    """Closed-form spectral sup-entropies for the supported model kinds."""
    kind = source.kind
    if kind == "iid":
        return SpectralEntropies(*_shannon(source.joint), method="shannon-iid")
    if kind == "two_symbolwise":
        hj, hxy, hyx = _shannon(source.joint)
        return SpectralEntropies(hj / 2, hxy / 2, hyx / 2, method="shannon-iid")
    if kind == "theorem9":
        q = _shannon(source.joint)
        lx, ly = math.log2(source.x_size), math.log2(source.y_size)
        u = (lx + ly, lx, ly)
        rho = source.rho
        vals = [rho * a + (1 - rho) * b for a, b in zip(q, u)]
        return SpectralEntropies(*vals, method="shannon-iid")
    if kind == "mixture":
        parts = [spectral_entropies(c) for c in source.components]
        return SpectralEntropies(
            max(p.h_joint for p in parts),
            max(p.h_x_given_y for p in parts),
            max(p.h_y_given_x for p in parts),
            method="mixture-max",
            tolerance=max(p.tolerance for p in parts),
        )
    if kind == "markov":
        hs = markov_entropy_rate(source.transition)
        ly, uy = observed_entropy_rate(source, "Y")
        lx, ux = observed_entropy_rate(source, "X")
        return SpectralEntropies(
            float(hs),
            float(hs - (ly + uy) / 2),
            float(hs - (lx + ux) / 2),
            method="markov-rate",
            tolerance=float(max(uy - ly, ux - lx) / 2),
        )
    raise ValueError(f"unsupported source kind {kind!r}")


def empirical_spectrum(source: SourceModel, n, samples, seed, level=0.999) -> SpectralEntropies:
    """Monte Carlo ``level``-quantiles of the normalised self-informations at length ``n``."""
    rng = np.random.default_rng(seed)
    xs, ys = source.sample(n, samples, rng)
    lj = source.log2_joint(xs, ys)
    lx = source.log2_marginal(xs, "X")
    ly = source.log2_marginal(ys, "Y")
    vals = (-lj / n, -(lj - ly) / n, -(lj - lx) / n)
    return SpectralEntropies(
        *(float(np.quantile(v, level)) for v in vals), method="empirical-spectrum"
    )


def _weighted_quantile(values, weights, level):
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(np.asarray(weights)[order])
    k = int(np.searchsorted(cum, level * cum[-1], side="left"))
    return float(np.asarray(values)[order][min(k, len(order) - 1)])


def iid_spectrum_quantile(joint, n, level=0.999):
    """Exact ``level``-quantiles for an i.i.d. source by enumerating joint types.

    Returns ``(joint, x_given_y, y_given_x)`` quantiles of the normalised
    self-information.
    """
    p = np.asarray(joint, dtype=float)
    cells = p.ravel()
    k = cells.size
    check_budget(math.comb(n + k - 1, k - 1), 10**7)
    with np.errstate(divide="ignore"):
        lp = np.log2(cells)
        lpy = np.log2(np.tile(p.sum(axis=0), p.shape[0]))
        lpx = np.log2(np.repeat(p.sum(axis=1), p.shape[1]))
    vals = ([], [], [])
    weights = []
    log_nfact = math.lgamma(n + 1)
    for cuts in itertools.combinations(range(n + k - 1), k - 1):
        counts = np.diff((-1,) + cuts + (n + k - 1,)) - 1
        live = counts > 0
        if np.any(cells[live] == 0):
            continue
        logw = log_nfact - sum(math.lgamma(c + 1) for c in counts) + float(
            (counts[live] * np.log(cells[live])).sum()
        )
        weights.append(math.exp(logw))
        lj = float((counts[live] * lp[live]).sum())
        vals[0].append(-lj / n)
        vals[1].append(-(lj - float((counts[live] * lpy[live]).sum())) / n)
        vals[2].append(-(lj - float((counts[live] * lpx[live]).sum())) / n)
    return tuple(_weighted_quantile(v, weights, level) for v in vals)


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class RateRegion:
    """``{(R1, R2): R1 >= r1_min, R2 >= r2_min, R1 + R2 >= sum_min}``; raw constraints are kept."""

    r1_min: float
    r2_min: float
    sum_min: float

    def canonical(self) -> "RateRegion":
        return RateRegion(self.r1_min, self.r2_min, max(self.sum_min, self.r1_min + self.r2_min))

    @property
    def min_sum_rate(self):
        return self.canonical().sum_min

    def corners(self):
        c = self.canonical()
        return [(c.r1_min, c.sum_min - c.r1_min), (c.sum_min - c.r2_min, c.r2_min)]

    def contains(self, point, tol=TOL):
        r1, r2 = point
        return (
            r1 >= self.r1_min - tol
            and r2 >= self.r2_min - tol
            and r1 + r2 >= self.sum_min - tol
        )

    def includes(self, other: "RateRegion", tol=TOL):
        """``other`` is a subset of ``self``; checked on the corners of ``other``."""
        return all(self.contains(p, tol) for p in other.corners())

    def equals(self, other: "RateRegion", tol=TOL):
        return self.includes(other, tol) and other.includes(self, tol)

    def to_dict(self):
        return {"r1_min": self.r1_min, "r2_min": self.r2_min, "sum_min": self.sum_min}


def sw_region_fl(source: SourceModel) -> RateRegion:
    e = spectral_entropies(source)
    return RateRegion(e.h_x_given_y, e.h_y_given_x, e.h_joint)


def sw_region_vl(source: SourceModel) -> Optional[RateRegion]:
    """Variable-length region, only for sources i.i.d. in (super-)symbols; ``None`` otherwise."""
    if source.kind in ("iid", "two_symbolwise"):
        return sw_region_fl(source)
    return None


def sw_rate_full_side(source: SourceModel) -> float:
    return spectral_entropies(source).h_x_given_y


def outer_bound_r_sensitive(e: SpectralEntropies, r) -> RateRegion:
    """Rate pairs whose sum can undercut the joint entropy by at most ``r``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    return RateRegion(e.h_x_given_y, e.h_y_given_x, e.h_joint - r)


@dataclass(frozen=True)
class Theorem9Regions:
    inner: RateRegion
    outer: RateRegion
    rho: float
    r_bar: float
    noise_entropy: float

    @property
    def gap(self):
        return self.outer.min_sum_rate - self.inner.min_sum_rate

    def to_dict(self):
        return {
            "inner": self.inner.to_dict(),
            "outer": self.outer.to_dict(),
            "rho": self.rho,
            "r_bar": self.r_bar,
            "noise_entropy": self.noise_entropy,
            "inner_min_sum": self.inner.min_sum_rate,
            "outer_min_sum": self.outer.min_sum_rate,
        }


def noise_entropy_bound(x_size, y_size, epsilon):
    """``h(eps) + eps log(|X||Y| - M)``: bounds the entropy of ``X + Y`` under the anti-diagonal law."""
    m = min(x_size, y_size)
    rest = x_size * y_size - m
    return binary_entropy(epsilon) + (epsilon * math.log2(rest) if rest > 1 else 0.0)


def epsilon_for_noise(x_size, y_size, target, tol=1e-13):
    """Largest ``eps`` on the increasing branch with ``noise_entropy_bound(eps) <= target``."""
    m = min(x_size, y_size)
    rest = x_size * y_size - m
    hi = rest / (rest + 1)  # maximiser of h(e) + e log(rest)
    if noise_entropy_bound(x_size, y_size, hi) <= target:
        return hi
    lo = 0.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if noise_entropy_bound(x_size, y_size, mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def theorem9_regions(x_size, y_size, r, delta, epsilon) -> Theorem9Regions:
    """Achievable inner region and the outer bound for the mixed modulo-sum pair."""
    if x_size < 1 or y_size < 1:
        raise ValueError("alphabet sizes must be at least 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    lx, ly = math.log2(x_size), math.log2(y_size)
    r_bar = min(lx, ly)
    if r < 0 or r > r_bar + TOL:
        raise ValueError(f"r must lie in [0, {r_bar}]")
    rho = min(r / r_bar, 1.0) if r_bar > 0 else 0.0
    noise = noise_entropy_bound(x_size, y_size, epsilon)
    if rho > 0 and noise > delta / rho + TOL:
        raise PreconditionError(
            "small anti-diagonal noise",
            f"h(eps) + eps*log(|X||Y|-M) = {noise:.6g} exceeds delta/rho = {delta / rho:.6g}",
        )
    inner = RateRegion(
        delta + (1 - rho) * lx,
        delta + (1 - rho) * ly,
        2 * delta + (1 - rho) * (lx + ly),
    )
    outer = RateRegion((1 - rho) * lx, (1 - rho) * ly, r - delta + (1 - rho) * (lx + ly))
    return Theorem9Regions(inner, outer, rho, r_bar, noise)
