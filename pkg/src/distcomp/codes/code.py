"""Distributed codes: two prefix-free encoders and a joint decoder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .. import _words
from ..errors import check_budget
from ..funclass import VectorFunction
from ..sources import SourceModel

WILSON_Z = 1.959963984540054


# --------------------------------------------------------------------------
# Elias gamma


def elias_int_encode(value: int) -> str:
    """Elias-gamma codeword: ``floor(log2 l)`` zeros, then ``l`` in binary."""
    if value < 1:
        raise ValueError("Elias-gamma encodes positive integers only")
    body = format(value, "b")
    return "0" * (len(body) - 1) + body


def elias_int_decode(bits: str, start: int = 0):
    """Inverse of :func:`elias_int_encode`; returns ``(value, next_position)``."""
    zeros = 0
    while start + zeros < len(bits) and bits[start + zeros] == "0":
        zeros += 1
    end = start + 2 * zeros + 1
    if end > len(bits):
        raise ValueError("truncated Elias-gamma codeword")
    return int(bits[start + zeros:end], 2), end


# --------------------------------------------------------------------------
# prefix-free sets


def kraft_sum(codewords) -> float:
    return math.fsum(2.0 ** -len(c) for c in set(codewords))


def is_prefix_free(codewords) -> bool:
    """No distinct codeword is a proper prefix of another (sorted scan)."""
    words = sorted(set(codewords))
    return all(not b.startswith(a) for a, b in zip(words, words[1:]))


def fixed_length_word(index, length):
    return format(index, f"0{length}b") if length else ""


# --------------------------------------------------------------------------
# the code


@dataclass(frozen=True, eq=False)
class DistributedCode:
    """Encoders as tuples of bit strings indexed by word index; ``decoder(c1, c2)`` gives a label.

    A decoder returning ``None`` declares an erasure, which always counts
    as an error.
    """

    n: int
    x_size: int
    y_size: int
    enc1: tuple
    enc2: tuple
    decoder: Callable[[str, str], object]
    name: str = "code"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.enc1) != self.x_size**self.n or len(self.enc2) != self.y_size**self.n:
            raise ValueError("encoder tables must cover every word")

    # lengths and structure

    @property
    def lengths1(self):
        return np.fromiter((len(c) for c in self.enc1), dtype=np.int64, count=len(self.enc1))

    @property
    def lengths2(self):
        return np.fromiter((len(c) for c in self.enc2), dtype=np.int64, count=len(self.enc2))

    @property
    def kind(self):
        fixed = len(set(self.lengths1.tolist())) == 1 and len(set(self.lengths2.tolist())) == 1
        return "fixed-length" if fixed else "variable-length"

    @property
    def L1(self):
        return float(self.lengths1.max()) / self.n

    @property
    def L2(self):
        return float(self.lengths2.max()) / self.n

    def kraft_sums(self):
        return kraft_sum(self.enc1), kraft_sum(self.enc2)

    def is_prefix_free(self):
        return is_prefix_free(self.enc1) and is_prefix_free(self.enc2)

    # evaluation

    def encode(self, x, y):
        return (
            self.enc1[_words.word_to_index(x, self.x_size)],
            self.enc2[_words.word_to_index(y, self.y_size)],
        )

    def decode(self, c1, c2):
        return self.decoder(c1, c2)

    def output_table(self, fn: VectorFunction) -> np.ndarray:
        """Decoder output for every ``(x, y)`` as ``fn`` label codes; ``-1`` marks labels outside the image."""
        if (fn.n, fn.x_size, fn.y_size) != (self.n, self.x_size, self.y_size):
            raise ValueError("code and function disagree on block length or alphabets")
        hook = self.meta.get("output_table")
        if hook is not None:
            out = hook(fn)
            if out is not None:
                return out
        u1, id1 = np.unique(np.array(self.enc1, dtype=object).astype(str), return_inverse=True)
        u2, id2 = np.unique(np.array(self.enc2, dtype=object).astype(str), return_inverse=True)
        check_budget(len(u1) * len(u2), fn.budget)
        index = fn.label_index
        small = np.full((len(u1), len(u2)), -1, dtype=np.int64)
        for i, c1 in enumerate(u1):
            for j, c2 in enumerate(u2):
                out = self.decoder(str(c1), str(c2))
                if out is not None:
                    small[i, j] = index.get(_freeze(out), -1)
        return small[id1[:, None], id2[None, :]]

    def correct_mask(self, fn: VectorFunction) -> np.ndarray:
        return self.output_table(fn) == fn.table

    def to_dict(self, fn: Optional[VectorFunction] = None):
        """Explicit tables; the decoder is listed on every codeword pair that occurs."""
        pairs = {}
        for c1 in sorted(set(self.enc1)):
            for c2 in sorted(set(self.enc2)):
                out = self.decoder(c1, c2)
                pairs[f"{c1}|{c2}"] = _jsonable(out)
        return {
            "n": self.n,
            "x_size": self.x_size,
            "y_size": self.y_size,
            "kind": self.kind,
            "enc1": list(self.enc1),
            "enc2": list(self.enc2),
            "dec": pairs,
        }


def _freeze(z):
    if isinstance(z, (list, tuple)):
        return tuple(_freeze(v) for v in z)
    if isinstance(z, np.generic):
        return z.item()
    return z


def _jsonable(z):
    if isinstance(z, tuple):
        return [_jsonable(v) for v in z]
    return z


def table_decoder(mapping):
    """Decoder from an explicit ``{(c1, c2): label}`` dictionary; missing pairs are erasures."""
    mapping = {k: _freeze(v) for k, v in mapping.items()}
    return lambda c1, c2: mapping.get((c1, c2))


def code_from_tables(n, x_size, y_size, enc1, enc2, dec, name="code"):
    return DistributedCode(n, x_size, y_size, tuple(enc1), tuple(enc2), table_decoder(dec), name)


def side_information_encoder(n, y_size):
    """Fixed-length binary index of ``y``: the decoder effectively sees ``y`` itself."""
    width = math.ceil(n * math.log2(y_size)) if y_size > 1 else 0
    return tuple(fixed_length_word(j, width) for j in range(y_size**n))


def side_information_code(n, x_size, y_size, enc1, decide, name="side-information code"):
    """Code whose second encoder is lossless; ``decide(c1, y_word)`` returns the label."""
    enc2 = side_information_encoder(n, y_size)
    lookup = {c: _words.index_to_word(j, y_size, n) for j, c in enumerate(enc2)}

    def decoder(c1, c2):
        y = lookup.get(c2)
        return None if y is None else decide(c1, y)

    return DistributedCode(n, x_size, y_size, tuple(enc1), enc2, decoder, name)


def identity_code(n, x_size, y_size):
    """Lossless fixed-length code for ``f(x, y) = (x, y)``."""
    w1 = math.ceil(n * math.log2(x_size)) if x_size > 1 else 0
    w2 = math.ceil(n * math.log2(y_size)) if y_size > 1 else 0
    enc1 = tuple(fixed_length_word(i, w1) for i in range(x_size**n))
    enc2 = tuple(fixed_length_word(j, w2) for j in range(y_size**n))
    lx = {c: _words.index_to_word(i, x_size, n) for i, c in enumerate(enc1)}
    ly = {c: _words.index_to_word(j, y_size, n) for j, c in enumerate(enc2)}

    def decoder(c1, c2):
        if c1 in lx and c2 in ly:
            return (lx[c1], ly[c2])
        return None

    return DistributedCode(n, x_size, y_size, enc1, enc2, decoder, "identity")


def constant_decoder_code(n, x_size, y_size, label):
    """Sends nothing and always outputs ``label``."""
    return DistributedCode(
        n, x_size, y_size, ("",) * x_size**n, ("",) * y_size**n,
        lambda c1, c2: label, "constant",
    )


# --------------------------------------------------------------------------
# error probabilities


def error_probability_exact(code: DistributedCode, source: SourceModel, fn: VectorFunction) -> float:
    """``P(f_n(X, Y) != decoded value)``, summed exactly over all block pairs."""
    table = source.block_table(code.n)
    wrong = ~code.correct_mask(fn)
    return math.fsum(table[wrong].tolist())


@dataclass(frozen=True)
class MCEstimate:
    errors: int
    trials: int
    low: float
    high: float

    @property
    def estimate(self):
        return self.errors / self.trials

    def to_dict(self):
        return {
            "errors": self.errors,
            "trials": self.trials,
            "estimate": self.estimate,
            "ci_low": self.low,
            "ci_high": self.high,
        }


def wilson_interval(errors, trials, z=WILSON_Z):
    if trials < 1:
        raise ValueError("need at least one trial")
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, centre - half)
    high = 1.0 if errors == trials else min(1.0, centre + half)
    return low, high


def partition_sizes(trials, partitions):
    base, extra = divmod(trials, partitions)
    return [base + (k < extra) for k in range(partitions)]


def error_probability_mc(
    code: DistributedCode, source: SourceModel, fn: VectorFunction, trials, seed, partitions=1
) -> MCEstimate:
    """Monte Carlo error estimate with a Wilson 95% interval.

    Trials are split into ``partitions`` independent streams spawned from
    ``seed``; the merged count does not depend on how partitions are run.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    wrong = ~code.correct_mask(fn)
    streams = np.random.SeedSequence(seed).spawn(partitions)
    errors = 0
    for ss, size in zip(streams, partition_sizes(trials, partitions)):
        if size == 0:
            continue
        xs, ys = source.sample(code.n, size, np.random.default_rng(ss))
        xi = _words.indices_of(xs, code.x_size)
        yi = _words.indices_of(ys, code.y_size)
        errors += int(wrong[xi, yi].sum())
    return MCEstimate(errors, trials, *wilson_interval(errors, trials))


def map_decoder_code(source: SourceModel, fn: VectorFunction, enc1, enc2, name="MAP code"):
    """Attach the decoder that outputs the most probable label for each codeword pair."""
    n = fn.n
    table = source.block_table(n)
    u1, id1 = np.unique(np.array(enc1, dtype=object).astype(str), return_inverse=True)
    u2, id2 = np.unique(np.array(enc2, dtype=object).astype(str), return_inverse=True)
    n2 = len(u2)
    cell = (id1[:, None] * n2 + id2[None, :]).ravel()
    lab = fn.table.ravel()
    key, inv = np.unique(cell * len(fn.labels) + lab, return_inverse=True)
    mass = np.bincount(inv, weights=table.ravel())
    kcell, klab = np.divmod(key, len(fn.labels))
    # per cell: largest mass first, ties to the smallest label code
    order = np.lexsort((klab, -mass, kcell))
    first = np.ones(len(order), dtype=bool)
    first[1:] = kcell[order][1:] != kcell[order][:-1]
    best = np.zeros((len(u1), n2), dtype=np.int64)
    best.flat[kcell[order][first]] = klab[order][first]
    labels = fn.labels
    lookup1 = {str(c): i for i, c in enumerate(u1)}
    lookup2 = {str(c): j for j, c in enumerate(u2)}

    def decoder(c1, c2):
        if c1 not in lookup1 or c2 not in lookup2:
            return None
        return labels[best[lookup1[c1], lookup2[c2]]]

    out = best[id1[:, None], id2[None, :]]
    return DistributedCode(
        n, fn.x_size, fn.y_size, tuple(enc1), tuple(enc2), decoder, name,
        meta={"output_table": lambda f: out if f is fn else None},
    )
