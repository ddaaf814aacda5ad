"""Turn a code for ``f_n`` into a Slepian-Wolf code by adaptive-length random binning.

Each encoder sends ``l = ceil(len + 2 n delta)`` in Elias-gamma form and
then an ``l``-bit bin index. Bin indices come from a seeded hash of the
word index, so a construction is reproducible from its seed. The
decoder looks for the unique pair of the right lengths and bins inside
``S_n(l1, l2)``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from .. import _words
from ..errors import BudgetExceeded, check_budget
from ..funclass import VectorFunction, identity_function
from ..sources import SourceModel
from .code import DistributedCode, elias_int_encode, fixed_length_word, side_information_encoder
from .lemma import (
    TOL,
    BoundReport,
    SelfInformation,
    adaptive_lengths,
    require_sensitive,
    require_smooth_q,
    typical_sets,
    v_n,
)

ENUMERATION_LIMIT = 2**20


def bin_index(seed, side, word_index, bits):
    """Uniform ``bits``-bit bin for one word, derived from ``(seed, side, word_index)``."""
    if bits == 0:
        return 0
    return random.Random(f"{seed}/{side}/{word_index}").getrandbits(bits)


def random_bin_encoder(size, n, bits, seed, side):
    """Fixed-length encoder sending a ``bits``-bit seeded bin of each word."""
    return tuple(fixed_length_word(bin_index(seed, side, i, bits), bits) for i in range(size**n))


def _codeword(length, bin_value):
    return elias_int_encode(length) + format(bin_value, f"0{length}b")


@dataclass(frozen=True)
class LengthReport:
    """Worst-case slack of ``|new codeword| <= len + 2 n delta + 2 log2(n L + 2 n delta) + 3``."""

    min_slack1: float
    min_slack2: float
    L1: float
    L2: float

    @property
    def holds(self):
        return self.min_slack1 >= -TOL and self.min_slack2 >= -TOL

    def to_dict(self):
        return {
            "min_slack1": self.min_slack1,
            "min_slack2": self.min_slack2,
            "L1": self.L1,
            "L2": self.L2,
        }


def length_slack(old_lengths, new_lengths, n, delta):
    old = np.asarray(old_lengths, dtype=float)
    top = n * (old.max() / n) + 2 * n * delta
    bound = old + 2 * n * delta + 2 * math.log2(top) + 3
    return float((bound - np.asarray(new_lengths, dtype=float)).min())


# --------------------------------------------------------------------------
# two-encoder construction


class _BinnedSide:
    def __init__(self, lengths, n, delta, seed, side):
        self.lt = adaptive_lengths(lengths, n, delta)
        self.bins = np.array(
            [bin_index(seed, side, w, int(l)) for w, l in enumerate(self.lt)], dtype=object
        )
        self.words = tuple(_codeword(int(l), int(b)) for l, b in zip(self.lt, self.bins))
        _, self.group = np.unique(np.array(self.words), return_inverse=True)


def build_random_binning_sw(phi: DistributedCode, source: SourceModel, delta, seed):
    """SW code from ``phi``'s length profile; returns ``(code, LengthReport)``.

    The returned code computes the identity function; its ``meta`` keeps the
    exact expected error over bin draws and the atypicality bound.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = phi.n
    check_budget(phi.x_size**n * phi.y_size**n, source.budget)
    info = SelfInformation.of(source, n)
    s1 = _BinnedSide(phi.lengths1, n, delta, seed, 1)
    s2 = _BinnedSide(phi.lengths2, n, delta, seed, 2)
    in_s = (
        (info.x_given_y <= s1.lt[:, None] - n * delta + TOL)
        & (info.y_given_x <= s2.lt[None, :] - n * delta + TOL)
        & (info.joint <= s1.lt[:, None] + s2.lt[None, :] - n * delta + TOL)
    )
    g1, g2 = s1.group, s2.group
    ng1, ng2 = g1.max() + 1, g2.max() + 1
    cells = np.argwhere(in_s)
    counts = np.zeros((ng1, ng2), dtype=np.int64)
    np.add.at(counts, (g1[cells[:, 0]], g2[cells[:, 1]]), 1)
    winner = np.full((ng1, ng2), -1, dtype=np.int64)
    winner[g1[cells[:, 0]], g2[cells[:, 1]]] = cells[:, 0] * phi.y_size**n + cells[:, 1]
    winner[counts != 1] = -1
    decoded = winner[g1[:, None], g2[None, :]]

    index1 = {w: g for w, g in zip(s1.words, g1)}
    index2 = {w: g for w, g in zip(s2.words, g2)}
    ny = phi.y_size**n

    def decoder(c1, c2):
        if c1 not in index1 or c2 not in index2:
            return None
        cell = winner[index1[c1], index2[c2]]
        if cell < 0:
            return None
        x, y = divmod(int(cell), ny)
        return (_words.index_to_word(x, phi.x_size, n), _words.index_to_word(y, phi.y_size, n))

    def output_table(fn):
        if fn.origin != "identity":
            raise ValueError("the binning code reproduces (x, y); pair it with the identity function")
        return decoded

    code = DistributedCode(
        n, phi.x_size, phi.y_size, s1.words, s2.words, decoder, "random-binning SW",
        meta={"output_table": output_table, "delta": delta, "seed": seed, "in_s": in_s,
              "adaptive1": s1.lt, "adaptive2": s2.lt},
    )
    report = LengthReport(
        length_slack(phi.lengths1, code.lengths1, n, delta),
        length_slack(phi.lengths2, code.lengths2, n, delta),
        phi.L1,
        phi.L2,
    )
    return code, report


def _success_probability(cx, cy, comp, p1, p2, limit):
    """P(no competitor shares both bins with the true pair).

    ``comp`` lists competitor cells ``(x', y')``; ``cx``/``cy`` are the true
    words. Collision indicators are independent per word with rates ``p1``
    (x side) and ``p2`` (y side).
    """
    if not comp:
        return 1.0
    ys = sorted({b for _, b in comp if b != cy})
    xs = sorted({a for a, _ in comp if a != cx})
    if len(ys) > len(xs):
        # enumerate the smaller side by symmetry
        return _success_probability(cy, cx, [(b, a) for a, b in comp], p2, p1, limit)
    if 2 ** len(ys) > limit:
        raise BudgetExceeded(2 ** len(ys), limit)
    by_y = {}
    for a, b in comp:
        by_y.setdefault(b, set()).add(a)
    base = by_y.get(cy, set())
    total = 0.0
    for r in range(len(ys) + 1):
        for chosen in itertools.combinations(ys, r):
            pr = p2**r * (1 - p2) ** (len(ys) - r)
            if pr == 0:
                continue
            hit = set(base)
            for b in chosen:
                hit |= by_y[b]
            if cx in hit:
                continue
            total += pr * (1 - p1) ** len(hit)
    return total


def expected_binning_error(code: DistributedCode, source: SourceModel, limit=ENUMERATION_LIMIT):
    """Exact expectation, over independent uniform bins, of the construction's error."""
    meta = code.meta
    n = code.n
    table = source.block_table(n)
    in_s = meta["in_s"]
    lt1, lt2 = meta["adaptive1"], meta["adaptive2"]
    total = 0.0
    for x, y in np.argwhere(table > 0):
        if not in_s[x, y]:
            total += table[x, y]
            continue
        same1 = np.nonzero(lt1 == lt1[x])[0]
        same2 = np.nonzero(lt2 == lt2[y])[0]
        block = in_s[np.ix_(same1, same2)]
        comp = [
            (int(same1[i]), int(same2[j]))
            for i, j in np.argwhere(block)
            if (same1[i], same2[j]) != (x, y)
        ]
        succ = _success_probability(int(x), int(y), comp, 2.0 ** -lt1[x], 2.0 ** -lt2[y], limit)
        total += table[x, y] * (1 - succ)
    return float(total)


def binning_bound_report(phi: DistributedCode, code: DistributedCode, source: SourceModel):
    """Expected error over bins against ``P(union of atypical sets) + 3 * 2^{-n delta}``."""
    n, delta = code.n, code.meta["delta"]
    table = source.block_table(n)
    info = SelfInformation.of(source, n)
    t1, t2, t0 = typical_sets(info, phi.lengths1, phi.lengths2, n, delta)
    atypical = math.fsum(table[~(t1 & t2 & t0)].tolist())
    idfn = identity_function(n, code.x_size, code.y_size)
    realized = math.fsum(table[code.output_table(idfn) != idfn.table].tolist())
    return BoundReport(
        "binning",
        expected_binning_error(code, source),
        atypical + 3 * 2.0 ** (-n * delta),
        {"atypical": atypical, "binning": 3 * 2.0 ** (-n * delta), "realized_error": realized},
    )


# --------------------------------------------------------------------------
# full side information


def build_full_side_sw(
    phi: DistributedCode, source: SourceModel, fn: VectorFunction, delta, beta, seed
):
    """SW code with the decoder seeing ``y``, built from a side-information code for ``fn``.

    Refuses unless ``fn`` is sensitive conditioned on Y and the source is
    smooth with respect to Y at this block length. Returns
    ``(code, LengthReport, BoundReport)``; the bound compares the exact
    expected error over bins with
    ``(1 + 2|Y|/(beta q)) P_e + (v + 2) 2^{-n delta}``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    n = phi.n
    require_sensitive(fn, "Y")
    q = require_smooth_q(source, n, "Y")
    table = source.block_table(n)
    info = SelfInformation.of(source, n)
    side = _BinnedSide(phi.lengths1, n, delta, seed, 1)
    lt = side.lt
    in_s1 = info.x_given_y <= lt[:, None] - n * delta + TOL
    ny = phi.y_size**n

    # per (group, y): count of S-members and the member itself
    g = side.group
    ng = g.max() + 1
    counts = np.zeros((ng, ny), dtype=np.int64)
    cells = np.argwhere(in_s1)
    np.add.at(counts, (g[cells[:, 0]], cells[:, 1]), 1)
    winner = np.full((ng, ny), -1, dtype=np.int64)
    winner[g[cells[:, 0]], cells[:, 1]] = cells[:, 0]
    winner[counts != 1] = -1
    decoded_x = winner[g[:, None], np.arange(ny)[None, :]]

    enc2 = side_information_encoder(n, phi.y_size)
    index1 = {w: k for w, k in zip(side.words, g)}
    ylookup = {c: j for j, c in enumerate(enc2)}

    def decoder(c1, c2):
        if c1 not in index1 or c2 not in ylookup:
            return None
        j = ylookup[c2]
        x = winner[index1[c1], j]
        if x < 0:
            return None
        return (_words.index_to_word(int(x), phi.x_size, n), _words.index_to_word(j, phi.y_size, n))

    decoded = np.where(decoded_x >= 0, decoded_x * ny + np.arange(ny)[None, :], -1)

    def output_table(f):
        if f.origin != "identity":
            raise ValueError("the binning code reproduces (x, y); pair it with the identity function")
        return decoded

    code = DistributedCode(
        n, phi.x_size, phi.y_size, side.words, enc2, decoder, "full-side SW",
        meta={"output_table": output_table, "delta": delta, "seed": seed},
    )

    # exact expectation over bins
    expected = 0.0
    for x, y in np.argwhere(table > 0):
        if not in_s1[x, y]:
            expected += table[x, y]
            continue
        rivals = int((in_s1[:, y] & (lt == lt[x])).sum()) - 1
        expected += table[x, y] * (1 - (1 - 2.0 ** -lt[x]) ** rivals)

    correct = phi.correct_mask(fn)
    pe = math.fsum(table[~correct].tolist())
    t1 = info.x_given_y <= phi.lengths1[:, None] + n * delta + TOL
    t1c = math.fsum(table[~t1].tolist())
    v = v_n(n, phi.x_size, beta)
    tail = 2.0 ** (-n * delta)
    realized = math.fsum(table[decoded != np.arange(table.size).reshape(table.shape)].tolist())
    bound = BoundReport(
        "full_side",
        float(expected),
        (1 + 2 * phi.y_size / (beta * q)) * pe + (v + 2) * tail,
        {"pe": pe, "q": q, "v": v, "T1c": t1c, "intermediate": t1c + tail,
         "realized_error": realized},
    )
    lengths = LengthReport(length_slack(phi.lengths1, code.lengths1, n, delta), math.inf, phi.L1, 0.0)
    return code, lengths, bound
