"""Linear modulo-sum coding over GF(p) with exact maximum-likelihood decoding.

Both encoders multiply the leading ``m = floor(n rho)`` symbols by the same
random ``k x m`` matrix ``H`` over GF(p) and send the remaining symbols
raw. The decoder adds the two syndromes, which gives ``H z`` for
``z = x + y``, and picks the most likely ``z`` under the i.i.d. law of
``X + Y``.

``H`` is banded: column ``j`` is supported on rows ``[s_j, s_j + w)`` with
``s_j = j (k - w) // (m - 1)``. The band keeps the syndrome trellis at
``p^w`` states so maximum likelihood is exact via the Viterbi recursion.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .. import _words
from ..funclass import smallest_prime_above, sum_length, theorem9_function
from ..sources import SourceModel
from .code import DistributedCode, MCEstimate, fixed_length_word, wilson_interval

DEFAULT_MAX_STATES = 729
NEAR_COLUMNS = 32


def _digits_table(p, w):
    """``digits[s, t]``: digit ``t`` of state ``s`` in base ``p`` (digit 0 most significant)."""
    states = np.arange(p**w)
    return np.stack([(states // p ** (w - 1 - t)) % p for t in range(w)], axis=1) if w else np.zeros((1, 0), dtype=np.int64)


def _index(digits, p):
    w = digits.shape[1]
    out = np.zeros(digits.shape[0], dtype=np.int64)
    for t in range(w):
        out = out * p + digits[:, t]
    return out


@dataclass(frozen=True, eq=False)
class KMCode:
    x_size: int
    y_size: int
    n: int
    rho: float
    rate: float
    seed: int
    p: int
    m: int
    k: int
    w: int
    starts: np.ndarray
    band: np.ndarray  # (m, w) coefficients of column j on rows starts[j] .. starts[j]+w-1
    z_cost: np.ndarray  # -log2 P(Z = z)

    # ------------------------------------------------------------ structure

    @property
    def matrix(self):
        h = np.zeros((self.k, self.m), dtype=np.int64)
        for j in range(self.m):
            h[self.starts[j]:self.starts[j] + self.w, j] = self.band[j]
        return h

    @property
    def syndrome_bits(self):
        return math.ceil(self.k * math.log2(self.p)) if self.k else 0

    @property
    def tail_bits(self):
        t = self.n - self.m
        return (
            math.ceil(t * math.log2(self.x_size)) if self.x_size > 1 else 0,
            math.ceil(t * math.log2(self.y_size)) if self.y_size > 1 else 0,
        )

    @property
    def rates(self):
        t1, t2 = self.tail_bits
        return (self.syndrome_bits + t1) / self.n, (self.syndrome_bits + t2) / self.n

    # ------------------------------------------------------------- encoding

    def syndromes(self, words):
        """``H w[:m]`` over GF(p) for each row of ``words``."""
        words = np.asarray(words, dtype=np.int64)
        out = np.zeros((words.shape[0], self.k), dtype=np.int64)
        for j in range(self.m):
            out[:, self.starts[j]:self.starts[j] + self.w] += words[:, j:j + 1] * self.band[j]
        return out % self.p

    # ------------------------------------------------------------- decoding

    def decode_sums(self, target, batch=256):
        """Most likely ``z`` (shape ``(T, m)``) with ``H z = target``."""
        target = np.asarray(target, dtype=np.int64) % self.p
        if self.m == 0:
            return np.zeros((target.shape[0], 0), dtype=np.int64)
        if self.k == 0:
            best = int(np.argmin(self.z_cost))
            return np.full((target.shape[0], self.m), best, dtype=np.int64)
        out = [self._viterbi(target[i:i + batch]) for i in range(0, target.shape[0], batch)]
        return np.concatenate(out)

    def _viterbi(self, target):
        p, w, m = self.p, self.w, self.m
        trials = target.shape[0]
        nstates = p**w
        digits = _digits_table(p, w)
        metric = np.full((trials, nstates), np.inf, dtype=np.float32)
        metric[:, 0] = 0.0
        decisions = np.zeros((m, trials, nstates), dtype=np.uint8)
        shifts = []  # per column boundary: (d, leaving target code per trial)
        finite = np.isfinite(self.z_cost)
        rows = np.arange(trials)
        live = [z for z in range(p) if finite[z]]
        for j in range(m):
            # predecessor of s' under symbol z is s' - z * h_j
            best = choice = None
            for z in live:
                cand = np.take(metric, _index((digits - z * self.band[j]) % p, p), axis=1)
                cand += np.float32(self.z_cost[z])
                if best is None:
                    best, choice = cand, np.full(cand.shape, z, dtype=np.uint8)
                else:
                    better = cand < best
                    np.minimum(best, cand, out=best)
                    choice[better] = z
            decisions[j] = choice
            metric = best
            if j + 1 < m:
                d = int(self.starts[j + 1] - self.starts[j])
                if d:
                    lead = self._code(target[:, self.starts[j]:self.starts[j] + d])
                    keep = nstates // p**d
                    rest = np.arange(keep)
                    src = lead[:, None] * keep + rest[None, :]
                    shifted = np.full((trials, nstates), np.inf, dtype=np.float32)
                    shifted[:, rest * p**d] = metric[rows[:, None], src]
                    metric = shifted
                    shifts.append((j, d, lead))
        final = self._code(target[:, self.starts[m - 1]:self.starts[m - 1] + w])
        state = final.copy()
        z_hat = np.zeros((trials, m), dtype=np.int64)
        shift_at = {j: (d, lead) for j, d, lead in shifts}
        for j in range(m - 1, -1, -1):
            if j in shift_at:
                d, lead = shift_at[j]
                keep = nstates // p**d
                state = lead * keep + state // p**d
            z = decisions[j, rows, state].astype(np.int64)
            z_hat[:, j] = z
            state = _index((digits[state] - z[:, None] * self.band[j]) % p, p)
        return z_hat

    def _code(self, block):
        out = np.zeros(block.shape[0], dtype=np.int64)
        for t in range(block.shape[1]):
            out = out * self.p + block[:, t]
        return out

    # ----------------------------------------------------------- simulation

    def simulate(self, source: SourceModel, trials, seed, batch=256) -> MCEstimate:
        """Monte Carlo function-error rate; the tail is exact, so errors are wrong sums.

        The sampled words depend on ``seed`` only, not on ``batch``.
        """
        rng = np.random.default_rng(seed)
        xs, ys = source.sample(self.n, trials, rng)
        s = (self.syndromes(xs) + self.syndromes(ys)) % self.p
        z = (xs[:, :self.m] + ys[:, :self.m]) % self.p
        errors = int(np.any(self.decode_sums(s, batch) != z, axis=1).sum())
        return MCEstimate(errors, trials, *wilson_interval(errors, trials))

    def error_lower_bound(self):
        """Even a perfect decoder errs with at least ``1 - (mass of the p^k likeliest z)``."""
        probs = np.exp2(-self.z_cost)
        probs = probs[probs > 0]
        # enumerate type classes of z in decreasing probability
        budget = float(self.p) ** self.k
        counts = _type_classes(probs, self.m)
        covered = 0.0
        for logp, size in counts:
            take = min(size, budget)
            covered += take * 2.0**logp
            budget -= take
            if budget <= 0:
                break
        return max(0.0, 1.0 - covered)

    # ----------------------------------------------------------- small codes

    def to_distributed_code(self):
        """Explicit tables for small ``n``: syndrome and raw tail as bit strings."""
        fn = theorem9_function(self.x_size, self.y_size, self.n, self.rho)
        sb = self.syndrome_bits
        t1, t2 = self.tail_bits
        xw = _words.all_words(self.x_size, self.n)
        yw = _words.all_words(self.y_size, self.n)

        def enc(words, size, tb):
            syn = self.syndromes(words)
            out = []
            for wd, s in zip(words, syn):
                code = fixed_length_word(self._code(s[None, :])[0], sb) if sb else ""
                tail = _words.word_to_index(tuple(int(v) for v in wd[self.m:]), size) if self.n > self.m else 0
                out.append(code + (fixed_length_word(tail, tb) if tb else ""))
            return tuple(out)

        enc1 = enc(xw, self.x_size, t1)
        enc2 = enc(yw, self.y_size, t2)
        p, k = self.p, self.k

        def parse(c, size, tb):
            s_val = int(c[:sb], 2) if sb else 0
            syn = [(s_val // p ** (k - 1 - t)) % p for t in range(k)]
            t_val = int(c[sb:], 2) if tb else 0
            tail = _words.index_to_word(t_val, size, self.n - self.m) if self.n > self.m else ()
            return np.array(syn, dtype=np.int64), tail

        def decoder(c1, c2):
            s1, tx = parse(c1, self.x_size, t1)
            s2, ty = parse(c2, self.y_size, t2)
            z = self.decode_sums(((s1 + s2) % p)[None, :])[0]
            head = tuple(("s", int(v)) for v in z)
            return head + tuple(("p", (a, b)) for a, b in zip(tx, ty))

        return DistributedCode(self.n, self.x_size, self.y_size, enc1, enc2, decoder, "KM"), fn


def _type_classes(probs, m):
    """``(log2 prob, count)`` of every type class of length-``m`` words, likeliest first."""
    k = len(probs)
    logs = np.log2(probs)
    out = []
    for cuts in itertools.combinations(range(m + k - 1), k - 1):
        counts = np.diff((-1,) + cuts + (m + k - 1,)) - 1
        size = math.factorial(m)
        for c in counts:
            size //= math.factorial(int(c))
        out.append((float((counts * logs).sum()), size))
    out.sort(key=lambda t: -t[0])
    return out


def expurgated_band(m, k, w, p, starts, rng, depth):
    """Draw band columns one at a time, skipping short dependencies.

    Column ``j`` is drawn uniformly from the nonzero window vectors that are
    not minus a combination of at most ``depth`` earlier overlapping columns
    (Varshamov's greedy rule), so no codeword of weight ``<= depth + 1`` is
    built from nearby columns. Only the ``NEAR_COLUMNS`` most recent
    overlapping columns are considered, which keeps very low rates (where
    every column overlaps) tractable. If every vector is excluded the
    column is drawn from all nonzero vectors.
    """
    full = np.zeros((m, k), dtype=np.int64)
    band = np.zeros((m, w), dtype=np.int64)
    weights = p ** np.arange(w - 1, -1, -1)
    coeffs = {r: np.array(list(itertools.product(range(1, p), repeat=r))) for r in range(1, depth + 1)}
    for j in range(m):
        lo, hi = starts[j], starts[j] + w
        near = [i for i in range(j) if starts[i] + w > lo][-NEAR_COLUMNS:]
        outside = np.ones(k, dtype=bool)
        outside[lo:hi] = False
        banned = {0}
        for r in range(1, depth + 1):
            if len(near) < r or len(banned) >= p**w:
                break  # a full ban falls back to all nonzero vectors anyway
            combos = np.array(list(itertools.combinations(near, r)))
            sums = np.einsum("crk,sr->csk", full[combos], coeffs[r]).reshape(-1, k) % p
            inside = sums[~np.any(sums[:, outside], axis=1)]
            banned.update(((-inside[:, lo:hi]) % p @ weights).tolist())
        allowed = np.setdiff1d(np.arange(p**w), np.fromiter(banned, dtype=np.int64))
        if len(allowed) == 0:
            allowed = np.arange(1, p**w)
        v = int(rng.choice(allowed))
        band[j] = (v // weights) % p
        full[j, lo:hi] = band[j]
    return band


def km_modsum_code(x_size, y_size, rho, n, rate, seed, source: SourceModel,
                   max_states=DEFAULT_MAX_STATES, expurgation=3) -> KMCode:
    """Seeded banded linear code at ``rate`` bits per leading symbol for each encoder.

    ``expurgation=0`` draws band entries uniformly; a positive value applies
    :func:`expurgated_band` with that depth.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if source.kind != "theorem9" or (source.x_size, source.y_size) != (x_size, y_size) \
            or abs(source.rho - rho) > 1e-12:
        raise ValueError("source must be the modulo-sum construction with matching parameters")
    p = smallest_prime_above(x_size + y_size - 2)
    m = sum_length(n, rho)
    k = min(m, math.ceil(round(m * rate / math.log2(p), 9))) if m else 0
    width = 1
    while p ** (width + 1) <= max_states:
        width += 1
    w = min(k, width)
    starts = np.array([j * (k - w) // (m - 1) if m > 1 else 0 for j in range(m)], dtype=np.int64)
    rng = np.random.default_rng(seed)
    if m == 0 or w == 0:
        band = np.zeros((m, w), dtype=np.int64)
    elif expurgation:
        band = expurgated_band(m, k, w, p, starts, rng, expurgation)
    else:
        band = rng.integers(0, p, size=(m, w))
    q = source.joint
    pz = np.zeros(p)
    for a in range(x_size):
        for b in range(y_size):
            pz[(a + b) % p] += q[a, b]
    with np.errstate(divide="ignore"):
        cost = -np.log2(pz)
    return KMCode(x_size, y_size, n, rho, rate, seed, p, m, k, w, starts, band, cost)
