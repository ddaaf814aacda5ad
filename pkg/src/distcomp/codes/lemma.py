"""Exact checks of the sensitivity-to-probability bounds behind the converse results.

For a code computing ``f_n`` let ``D`` be the correctly decoded pairs. The
bounds compare ``P(D and atypical)`` against ``P_e`` of the code plus a
``2^{-n delta}`` term, with everything evaluated by enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import _words
from ..errors import PreconditionError
from ..funclass import (
    VectorFunction,
    is_highly_sensitive_given_Y,
    is_jointly_sensitive,
    is_sensitive_given_X,
    is_sensitive_given_Y,
    max_eq_rate,
)
from ..sources import SourceModel, certified_q, weak_smoothness_check
from .code import DistributedCode

TOL = 1e-9


@dataclass(frozen=True)
class TypicalSetConfig:
    delta: float
    beta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < self.beta < 0.5:
            raise ValueError("beta must lie in (0, 1/2)")


@dataclass(frozen=True)
class BoundReport:
    """Exact ``lhs`` against the assembled ``rhs``; ``components`` names the terms."""

    name: str
    lhs: float
    rhs: float
    components: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.lhs <= self.rhs + TOL

    def to_row(self, n):
        row = {"bound": self.name, "n": n, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}
        for k, v in sorted(self.components.items()):
            row[f"term:{k}"] = v
        return row


def distance_limit(n, beta):
    """``ceil(n * beta)``, robust to float noise in ``n * beta``."""
    return math.ceil(round(n * beta, 9))


def _ball_count(n, size, beta):
    top = distance_limit(n, beta) - 1
    return sum((size - 1) ** i * math.comb(n, i) for i in range(1, top + 1))


def v_n(n, x_size, beta) -> int:
    """``sum_{i=1}^{ceil(n beta)-1} (|X|-1)^i C(n, i)``: words at distance 1..ceil(n beta)-1."""
    return _ball_count(n, x_size, beta)


def u_n(n, y_size, beta) -> int:
    return _ball_count(n, y_size, beta)


def v_n_bound(n, size, beta) -> float:
    """``n |X|^{n beta} 2^{n h(beta)}``."""
    h = -beta * math.log2(beta) - (1 - beta) * math.log2(1 - beta)
    return n * size ** (n * beta) * 2 ** (n * h)


# --------------------------------------------------------------------------
# self-information and typical sets


@dataclass(frozen=True)
class SelfInformation:
    """``-log2`` of the joint and both conditionals at every block pair (``inf`` where null)."""

    joint: np.ndarray
    x_given_y: np.ndarray
    y_given_x: np.ndarray

    @classmethod
    def of(cls, source: SourceModel, n):
        t = source.block_table(n)
        with np.errstate(divide="ignore", invalid="ignore"):
            lj = -np.log2(t)
            ly = -np.log2(t.sum(axis=0))
            lx = -np.log2(t.sum(axis=1))
        xy = np.where(t > 0, lj - ly[None, :], np.inf)
        yx = np.where(t > 0, lj - lx[:, None], np.inf)
        return cls(lj, xy, yx)


def typical_sets(info: SelfInformation, l1, l2, n, delta, extra=0.0):
    """Membership masks for the three typical sets with length tables ``l1``, ``l2``.

    ``extra`` is added to the joint threshold (used for the ``r``-shifted set).
    """
    l1 = np.asarray(l1, dtype=float)[:, None]
    l2 = np.asarray(l2, dtype=float)[None, :]
    t1 = info.x_given_y <= (l1 + n * delta) + TOL
    t2 = info.y_given_x <= (l2 + n * delta) + TOL
    t0 = info.joint <= (l1 + l2 + n * (delta + extra)) + TOL
    return t1, t2, t0


def in_s_sets(info: SelfInformation, lt1, lt2, n, delta):
    """Pairs in ``S_n(l1, l2)`` evaluated at each pair's own lengths ``lt1(x)``, ``lt2(y)``."""
    a = np.asarray(lt1, dtype=float)[:, None]
    b = np.asarray(lt2, dtype=float)[None, :]
    return (
        (info.x_given_y <= a - n * delta + TOL)
        & (info.y_given_x <= b - n * delta + TOL)
        & (info.joint <= a + b - n * delta + TOL)
    )


def typical_masses(code: DistributedCode, source: SourceModel, cfg: TypicalSetConfig):
    """Masses of the atypical sets plus counting certificates for ``S_n(l1, l2)``.

    The certificates use ``l = ceil(len + 2 n delta)`` exactly as the
    binning construction does; each ``*_slack`` is the smallest gap
    between the counting bound and the actual count.
    """
    n = code.n
    table = source.block_table(n)
    info = SelfInformation.of(source, n)
    t1, t2, t0 = typical_sets(info, code.lengths1, code.lengths2, n, cfg.delta)
    mass = lambda m: math.fsum(table[m].tolist())  # noqa: E731
    out = {
        "T1c": mass(~t1),
        "T2c": mass(~t2),
        "T0c": mass(~t0),
        "union": mass(~(t1 & t2 & t0)),
    }
    lt1 = adaptive_lengths(code.lengths1, n, cfg.delta)
    lt2 = adaptive_lengths(code.lengths2, n, cfg.delta)
    s1_slack = s2_slack = s0_slack = math.inf
    nd = n * cfg.delta
    for l1 in sorted(set(lt1.tolist())):
        cnt = (info.x_given_y <= l1 - nd + TOL).sum(axis=0).max()
        s1_slack = min(s1_slack, 2.0 ** (l1 - nd) - cnt)
    for l2 in sorted(set(lt2.tolist())):
        cnt = (info.y_given_x <= l2 - nd + TOL).sum(axis=1).max()
        s2_slack = min(s2_slack, 2.0 ** (l2 - nd) - cnt)
    for l1 in sorted(set(lt1.tolist())):
        for l2 in sorted(set(lt2.tolist())):
            s = (
                (info.x_given_y <= l1 - nd + TOL)
                & (info.y_given_x <= l2 - nd + TOL)
                & (info.joint <= l1 + l2 - nd + TOL)
            )
            s0_slack = min(s0_slack, 2.0 ** (l1 + l2 - nd) - s.sum())
    out.update({"S1_count_slack": s1_slack, "S2_count_slack": s2_slack, "S_count_slack": s0_slack})
    return out


def adaptive_lengths(lengths, n, delta):
    """``ceil(len + 2 n delta)`` with a small tolerance against float noise."""
    return np.ceil(np.asarray(lengths, dtype=float) + 2 * n * delta - TOL).astype(np.int64)


# --------------------------------------------------------------------------
# hypotheses


def require_sensitive(fn: VectorFunction, given):
    check = is_sensitive_given_Y if given == "Y" else is_sensitive_given_X
    ok, w = check(fn)
    if not ok:
        raise PreconditionError(
            f"sensitivity conditioned on {given}",
            f"collision at x={w.x}, x_hat={w.x_hat}, y={w.y} is not broken at position {w.position}",
        )


def require_smooth_q(source: SourceModel, n, wrt):
    q = certified_q(source, n, wrt)
    if q <= 0:
        raise PreconditionError(
            f"smoothness with respect to {wrt}",
            f"a single flip of {wrt} sends a positive-probability pair to probability 0 at n={n}",
        )
    return q


# --------------------------------------------------------------------------
# the bounds


def lemma1_check(
    phi: DistributedCode,
    source: SourceModel,
    fn: VectorFunction,
    cfg: TypicalSetConfig,
    r: Optional[float] = None,
    q: Optional[float] = None,
):
    """Evaluate every bound whose hypotheses hold; refuse if none apply.

    ``q`` overrides the certified constant (it must not exceed it). With
    ``r`` the shifted joint bound is included; its finite-n hypothesis is
    ``max EQ <= 2^{n(r + delta)}`` with sensitivity on both sides.
    """
    n = phi.n
    table = source.block_table(n)
    info = SelfInformation.of(source, n)
    correct = phi.correct_mask(fn)
    pe = math.fsum(table[~correct].tolist())
    t1, t2, t0 = typical_sets(info, phi.lengths1, phi.lengths2, n, cfg.delta)
    v = v_n(n, phi.x_size, cfg.beta)
    u = u_n(n, phi.y_size, cfg.beta)
    tail = 2.0 ** (-n * cfg.delta)
    mass = lambda m: math.fsum(table[m].tolist())  # noqa: E731

    sens_y = is_sensitive_given_Y(fn)[0]
    sens_x = is_sensitive_given_X(fn)[0]
    joint = is_jointly_sensitive(fn)[0]
    q_y = certified_q(source, n, "Y")
    q_x = certified_q(source, n, "X")
    if q is not None:
        if q > min(q_x, q_y) + TOL or q <= 0:
            raise ValueError("override q must lie in (0, certified q]")
        q_y = q_x = q
    reports = {}
    if sens_y and q_y > 0:
        coef = 2 * phi.y_size / (cfg.beta * q_y)
        reports["core1"] = BoundReport(
            "core1", mass(correct & ~t1), coef * pe + (v + 1) * tail,
            {"pe": pe, "q": q_y, "v": v, "pe_coefficient": coef, "tail": (v + 1) * tail},
        )
    if sens_x and q_x > 0:
        coef = 2 * phi.x_size / (cfg.beta * q_x)
        reports["core2"] = BoundReport(
            "core2", mass(correct & ~t2), coef * pe + (u + 1) * tail,
            {"pe": pe, "q": q_x, "u": u, "pe_coefficient": coef, "tail": (u + 1) * tail},
        )
    qb = min(q_x, q_y)
    coef3 = 2 * (phi.x_size + phi.y_size) / (cfg.beta * qb) if qb > 0 else math.inf
    tail3 = (v + 1 + u + 1) * tail
    if sens_x and sens_y and joint and qb > 0:
        reports["core3"] = BoundReport(
            "core3", mass(correct & ~t0), coef3 * pe + tail3,
            {"pe": pe, "q": qb, "v": v, "u": u, "pe_coefficient": coef3, "tail": tail3},
        )
    if r is not None:
        if r < 0:
            raise ValueError("r must be nonnegative")
        eq_rate = max_eq_rate(fn)
        if sens_x and sens_y and qb > 0 and eq_rate <= r + cfg.delta + TOL:
            _, _, t0r = typical_sets(
                info, phi.lengths1, phi.lengths2, n, cfg.delta, extra=r + cfg.delta
            )
            reports["core3modified"] = BoundReport(
                "core3modified", mass(correct & ~t0r), coef3 * pe + tail3,
                {"pe": pe, "q": qb, "v": v, "u": u, "r": r, "max_eq_rate": eq_rate,
                 "pe_coefficient": coef3, "tail": tail3},
            )
    if not reports:
        if not (sens_x or sens_y):
            raise PreconditionError("sensitivity conditioned on X or Y", "neither side is sensitive")
        raise PreconditionError(
            "smoothness with respect to the sensitive side",
            f"certified q_X={q_x}, q_Y={q_y} at n={n}",
        )
    return reports


# --------------------------------------------------------------------------
# the pairing behind the first bound


@dataclass(frozen=True)
class PairStep:
    """One greedy pair with its flip witnesses ``(x_star, y_flipped, position)``."""

    x_first: tuple
    x_second: tuple
    witnesses: tuple
    reference_prob: Optional[float]
    min_witness_prob: float


@dataclass(frozen=True)
class PairingTranscript:
    codeword: str
    y: tuple
    sorted_size: int
    guaranteed_pairs: int
    steps: tuple
    ok: bool
    q: float

    def to_dict(self):
        return {
            "codeword": self.codeword,
            "y": list(self.y),
            "sorted_size": self.sorted_size,
            "guaranteed_pairs": self.guaranteed_pairs,
            "pairs": len(self.steps),
            "ok": self.ok,
        }


def positive_floor(a):
    """``[a]^+``: 0 below 1, else ``floor(a)``."""
    return 0 if a < 1 else math.floor(a)


class _PairingContext:
    def __init__(self, code, source, fn, beta, weak):
        self.code, self.fn, self.beta, self.weak = code, fn, beta, weak
        self.n = code.n
        self.table = source.block_table(self.n)
        self.correct = code.correct_mask(fn)
        self.dx = _words.all_words(code.x_size, self.n)
        self.flips = _words.flip_table(code.y_size, self.n)
        self.v = v_n(self.n, code.x_size, beta)
        self.dmin = distance_limit(self.n, beta)
        self.enc1 = np.array(code.enc1, dtype=object)
        if weak:
            high, _ = is_highly_sensitive_given_Y(fn)
            if not high:
                raise PreconditionError("high sensitivity conditioned on Y")
            self.q, witness = weak_smoothness_check(source, self.n)
            if self.q <= 0:
                raise PreconditionError(
                    "weak smoothness with respect to Y", f"no admissible flip for {witness}"
                )
        else:
            require_sensitive(fn, "Y")
            self.q = require_smooth_q(source, self.n, "Y")

    def run(self, a, yi):
        members = [int(x) for x in np.nonzero((self.enc1 == a) & self.correct[:, yi])[0]]
        col = self.table[:, yi]
        ordered = sorted(members, key=lambda x: (-col[x], x))
        guaranteed = positive_floor((len(ordered) - self.v) / 2)
        taken = set()
        steps = []
        ok = True
        while True:
            free = [x for x in ordered if x not in taken]
            if not free:
                break
            first = free[0]
            second = next(
                (x for x in free[1:] if int((self.dx[x] != self.dx[first]).sum()) >= self.dmin),
                None,
            )
            if second is None:
                break
            taken.update((first, second))
            k = len(steps) + 1
            idx = self.v + 2 * k - 1  # zero-based position of x_{v+2k}
            ref = float(col[ordered[idx]]) if idx < len(ordered) else None
            step, good = self._witness(first, second, yi, ref)
            ok &= good
            if k <= guaranteed and ref is not None and col[second] < ref - TOL * max(ref, 1e-300):
                ok = False
            steps.append(step)
        if len(steps) < guaranteed:
            ok = False
        return PairingTranscript(
            a,
            _words.index_to_word(yi, self.code.y_size, self.n),
            len(ordered), guaranteed, tuple(steps), ok, self.q,
        )

    def _witness(self, first, second, yi, ref):
        t = self.table
        positions = np.nonzero(self.dx[first] != self.dx[second])[0][: self.dmin]
        witnesses = []
        probs = []
        ok = True
        skip = self.weak and t[first, yi] * t[second, yi] == 0
        for i in positions:
            if skip:
                break
            options = [int(self.flips[yi, i, k]) for k in range(1, self.code.y_size)]
            if self.weak:
                def score(yj):
                    return min(t[first, yj] / t[first, yi], t[second, yj] / t[second, yi])
                yj = max(options, key=lambda c: (score(c), -c))
                if score(yj) < self.q - TOL:
                    ok = False
            else:
                yj = next(
                    (c for c in options if self.fn.table[first, c] != self.fn.table[second, c]),
                    None,
                )
                if yj is None:
                    ok = False
                    continue
            if self.fn.table[first, yj] == self.fn.table[second, yj]:
                ok = False
                continue
            star = first if not self.correct[first, yj] else second
            if self.correct[star, yj]:
                ok = False  # sensitivity forces one of the two into the error set
                continue
            p = float(t[star, yj])
            if ref is not None and p < self.q * ref * (1 - 1e-12):
                ok = False
            witnesses.append((_words.index_to_word(star, self.code.x_size, self.n),
                              _words.index_to_word(yj, self.code.y_size, self.n), int(i) + 1))
            probs.append(p)
        step = PairStep(
            _words.index_to_word(first, self.code.x_size, self.n),
            _words.index_to_word(second, self.code.x_size, self.n),
            tuple(witnesses), ref, min(probs) if probs else math.inf,
        )
        return step, ok


def pairing_construction(code, source, fn, a, y, beta, weak=False) -> PairingTranscript:
    """Greedy pairing for the correctly decoded x's sharing codeword ``a`` at side word ``y``."""
    ctx = _PairingContext(code, source, fn, beta, weak)
    return ctx.run(a, _words.word_to_index(y, code.y_size))


def weak_mode_pairing(code, source, fn, a, y, beta) -> PairingTranscript:
    """Same pairing under weak smoothness and high sensitivity."""
    return pairing_construction(code, source, fn, a, y, beta, weak=True)


@dataclass(frozen=True)
class PairingAudit:
    transcripts: tuple
    aggregated: BoundReport
    max_overlap: int
    overlap_limit: int

    @property
    def ok(self):
        return (
            all(t.ok for t in self.transcripts)
            and self.aggregated.holds
            and self.max_overlap <= self.overlap_limit
        )


def pairing_audit(code, source, fn, beta, weak=False) -> PairingAudit:
    """Run the pairing for every ``(codeword, y)`` and check the aggregated inequality.

    The aggregated report compares ``sum P(x_{v+2k}, y)`` over all cells
    and guaranteed pairs with ``|Y| / (beta q) * P_e``.
    """
    ctx = _PairingContext(code, source, fn, beta, weak)
    table = ctx.table
    pe = math.fsum(table[~ctx.correct].tolist())
    transcripts = []
    total = []
    overlap = {}
    for a in sorted(set(code.enc1)):
        for yi in range(code.y_size**code.n):
            tr = ctx.run(a, yi)
            transcripts.append(tr)
            for k, step in enumerate(tr.steps, start=1):
                if k <= tr.guaranteed_pairs and step.reference_prob is not None:
                    total.append(step.reference_prob)
                for star, yj, _ in step.witnesses:
                    overlap[(star, yj)] = overlap.get((star, yj), 0) + 1
    rhs = code.y_size / (beta * ctx.q) * pe
    agg = BoundReport("pairing", math.fsum(total), rhs, {"pe": pe, "q": ctx.q})
    return PairingAudit(
        tuple(transcripts), agg, max(overlap.values(), default=0), code.n * code.y_size
    )
