"""Finite-alphabet joint sources with exact block probabilities.

Five model families are supported: i.i.d. pairs, Markov chains on the
pair alphabet, finite mixtures, sources that are i.i.d. over consecutive
symbol pairs, and the mixed modulo-sum construction (``theorem9``) whose
leading block is drawn from an anti-diagonal law and whose tail is
uniform.

Word indices follow :mod:`distcomp._words` (first symbol most significant),
so ``block_table(n)[i, j]`` is ``P(x, y)`` for the ``i``-th x-word and
``j``-th y-word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _words
from .errors import DEFAULT_BUDGET, PreconditionError, check_budget
from .funclass import SingleLetterFunction, counterexample_quadruple, is_hk, sum_length

KINDS = ("iid", "markov", "mixture", "two_symbolwise", "theorem9")
NORMALIZATION_TOL = 1e-12


def _prob_array(values, shape, what):
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{what} must be finite and nonnegative")
    return arr


def _check_sums_to_one(total, what):
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"{what} sums to {total!r}, not 1")


def anti_diagonal_law(x_size, y_size, epsilon):
    """``Q`` putting ``(1-eps)/M`` on ``(i, M-1-i)`` and spreading ``eps`` uniformly elsewhere."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    m = min(x_size, y_size)
    rest = x_size * y_size - m
    if rest == 0 and epsilon > 0:
        raise ValueError("no off-diagonal cells to carry epsilon")
    q = np.full((x_size, y_size), epsilon / rest if rest else 0.0)
    for i in range(m):
        q[i, m - 1 - i] = (1 - epsilon) / m
    return q


@dataclass(frozen=True, eq=False)
class SourceModel:
    """A joint source ``(X, Y)``. Build it with the ``iid``, ``markov``, ... constructors."""

    kind: str
    x_size: int
    y_size: int
    joint: Optional[np.ndarray] = None
    transition: Optional[np.ndarray] = None
    initial: Optional[np.ndarray] = None
    components: tuple = ()
    weights: tuple = ()
    rho: Optional[float] = None
    epsilon: Optional[float] = None
    budget: int = DEFAULT_BUDGET
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # ---------------------------------------------------------------- builders

    @classmethod
    def iid(cls, joint):
        joint = np.asarray(joint, dtype=float)
        if joint.ndim != 2:
            raise ValueError("joint table must be two-dimensional")
        p = _prob_array(joint, joint.shape, "joint table")
        _check_sums_to_one(p.sum(), "joint table")
        return cls("iid", p.shape[0], p.shape[1], joint=p)

    @classmethod
    def markov(cls, x_size, y_size, transition, initial):
        """Chain on pairs ``s = x * y_size + y``; ``transition[s, s']`` is ``P(s' | s)``."""
        s = x_size * y_size
        w = _prob_array(transition, (s, s), "transition matrix")
        for row in w:
            _check_sums_to_one(row.sum(), "transition row")
        p0 = _prob_array(initial, (s,), "initial distribution")
        _check_sums_to_one(p0.sum(), "initial distribution")
        return cls("markov", x_size, y_size, transition=w, initial=p0)

    @classmethod
    def mixture(cls, components, weights):
        components = tuple(components)
        weights = tuple(float(w) for w in weights)
        if not components or len(components) != len(weights):
            raise ValueError("need one positive weight per component")
        if any(w <= 0 for w in weights):
            raise ValueError("mixture weights must be positive")
        _check_sums_to_one(math.fsum(weights), "mixture weights")
        xs, ys = components[0].x_size, components[0].y_size
        if any((c.x_size, c.y_size) != (xs, ys) for c in components):
            raise ValueError("mixture components must share alphabets")
        return cls("mixture", xs, ys, components=components, weights=weights)

    @classmethod
    def two_symbolwise(cls, x_size, y_size, pair_joint):
        """I.i.d. over consecutive pairs; ``pair_joint[u, v]`` with ``u = x1*|X| + x2``."""
        p = _prob_array(pair_joint, (x_size**2, y_size**2), "pair joint table")
        _check_sums_to_one(p.sum(), "pair joint table")
        return cls("two_symbolwise", x_size, y_size, joint=p)

    @classmethod
    def theorem9(cls, x_size, y_size, rho, epsilon):
        if not 0 <= rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        q = anti_diagonal_law(x_size, y_size, epsilon)
        return cls("theorem9", x_size, y_size, joint=q, rho=float(rho), epsilon=float(epsilon))

    # --------------------------------------------------------------- structure

    @property
    def pair_size(self):
        return self.x_size * self.y_size

    def uniform_pair(self):
        return np.full((self.x_size, self.y_size), 1.0 / self.pair_size)

    def check_length(self, n):
        if n < 1:
            raise ValueError("block length must be positive")
        if self.kind == "two_symbolwise" and n % 2:
            raise ValueError("two-symbol-wise sources need an even block length")
        if self.kind == "mixture":
            for c in self.components:
                c.check_length(n)

    def letter_laws(self, n):
        """Per-position single-letter tables for product-form kinds, else ``None``."""
        if self.kind == "iid":
            return [self.joint] * n
        if self.kind == "theorem9":
            m = sum_length(n, self.rho)
            return [self.joint] * m + [self.uniform_pair()] * (n - m)
        return None

    # ------------------------------------------------------------ exact tables

    def block_table(self, n) -> np.ndarray:
        """Dense ``(|X|^n, |Y|^n)`` array of block probabilities (cached)."""
        self.check_length(n)
        key = ("table", n)
        if key in self._cache:
            return self._cache[key]
        check_budget(self.pair_size**n, self.budget)
        if self.kind in ("iid", "theorem9"):
            table = np.ones((1, 1))
            for law in self.letter_laws(n):
                table = np.kron(table, law)
        elif self.kind == "two_symbolwise":
            table = np.ones((1, 1))
            for _ in range(n // 2):
                table = np.kron(table, self.joint)
        elif self.kind == "mixture":
            table = sum(w * c.block_table(n) for w, c in zip(self.weights, self.components))
        else:
            table = self._markov_table(n)
        table.setflags(write=False)
        self._cache[key] = table
        return table

    def _markov_table(self, n):
        s = self.pair_size
        p = self.initial.copy()
        for _ in range(n - 1):
            last = np.arange(p.size) % s
            p = (p[:, None] * self.transition[last]).ravel()
        states = _words.all_words(s, n)
        xi = _words.indices_of(states // self.y_size, self.x_size)
        yi = _words.indices_of(states % self.y_size, self.y_size)
        table = np.zeros((self.x_size**n, self.y_size**n))
        table[xi, yi] = p
        return table

    def block_pmf(self, x, y) -> float:
        x, y = tuple(x), tuple(y)
        if len(x) != len(y):
            raise ValueError("x and y must have the same length")
        n = len(x)
        self.check_length(n)
        lx = self.log2_joint(np.array([x]), np.array([y]))[0]
        return float(2.0**lx)

    # ------------------------------------------------- log-probabilities of samples

    def _validate_words(self, words, size):
        words = np.asarray(words, dtype=np.int64)
        if words.ndim != 2:
            raise ValueError("expected a 2-d array of words")
        if words.size and (words.min() < 0 or words.max() >= size):
            raise ValueError("symbol outside the alphabet")
        return words

    def log2_joint(self, xs, ys) -> np.ndarray:
        """``log2 P(x, y)`` for each row of ``xs``, ``ys`` (``-inf`` for impossible pairs)."""
        xs = self._validate_words(xs, self.x_size)
        ys = self._validate_words(ys, self.y_size)
        if xs.shape != ys.shape:
            raise ValueError("x and y words must have the same shape")
        n = xs.shape[1]
        self.check_length(n)
        with np.errstate(divide="ignore"):
            if self.kind in ("iid", "theorem9"):
                out = np.zeros(xs.shape[0])
                for i, law in enumerate(self.letter_laws(n)):
                    out += np.log2(law[xs[:, i], ys[:, i]])
                return out
            if self.kind == "two_symbolwise":
                u = xs[:, 0::2] * self.x_size + xs[:, 1::2]
                v = ys[:, 0::2] * self.y_size + ys[:, 1::2]
                return np.log2(self.joint[u, v]).sum(axis=1)
            if self.kind == "mixture":
                parts = [
                    math.log2(w) + c.log2_joint(xs, ys)
                    for w, c in zip(self.weights, self.components)
                ]
                return np.logaddexp2.reduce(np.stack(parts), axis=0)
            s = xs * self.y_size + ys
            out = np.log2(self.initial[s[:, 0]])
            for i in range(1, n):
                out += np.log2(self.transition[s[:, i - 1], s[:, i]])
            return out

    def log2_marginal(self, words, side) -> np.ndarray:
        """``log2 P(y)`` (``side="Y"``) or ``log2 P(x)`` (``side="X"``) for each row."""
        if side not in ("X", "Y"):
            raise ValueError("side must be 'X' or 'Y'")
        axis = 1 if side == "X" else 0
        size = self.x_size if side == "X" else self.y_size
        words = self._validate_words(words, size)
        n = words.shape[1]
        self.check_length(n)
        with np.errstate(divide="ignore"):
            if self.kind in ("iid", "theorem9"):
                out = np.zeros(words.shape[0])
                for i, law in enumerate(self.letter_laws(n)):
                    out += np.log2(law.sum(axis=axis)[words[:, i]])
                return out
            if self.kind == "two_symbolwise":
                marg = self.joint.sum(axis=axis)
                u = words[:, 0::2] * size + words[:, 1::2]
                return np.log2(marg[u]).sum(axis=1)
            if self.kind == "mixture":
                parts = [
                    math.log2(w) + c.log2_marginal(words, side)
                    for w, c in zip(self.weights, self.components)
                ]
                return np.logaddexp2.reduce(np.stack(parts), axis=0)
            return self._markov_marginal(words, side)

    def _markov_marginal(self, words, side):
        # forward algorithm over the hidden coordinate, rescaled each step
        xs, ys = self.x_size, self.y_size
        w4 = self.transition.reshape(xs, ys, xs, ys)
        p0 = self.initial.reshape(xs, ys)
        if side == "X":
            w4 = w4.transpose(1, 0, 3, 2)
            p0 = p0.T
        # w4[h, o, h', o']: hidden h, observed o
        alpha = p0[:, words[:, 0]].T
        log_scale = np.zeros(words.shape[0])
        step = w4.transpose(1, 3, 0, 2)  # [o, o', h, h']
        for i in range(1, words.shape[1]):
            c = alpha.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                log_scale += np.log2(c)
                alpha = np.where(c[:, None] > 0, alpha / c[:, None], 0.0)
            alpha = np.einsum("th,thk->tk", alpha, step[words[:, i - 1], words[:, i]])
        with np.errstate(divide="ignore"):
            return log_scale + np.log2(alpha.sum(axis=1))

    # ----------------------------------------------------------------- sampling

    def sample(self, n, size, rng: np.random.Generator):
        """Draw ``size`` block pairs; returns ``(xs, ys)`` integer arrays of shape ``(size, n)``."""
        self.check_length(n)
        if self.kind in ("iid", "theorem9"):
            cells = np.empty((size, n), dtype=np.int64)
            for i, law in enumerate(self.letter_laws(n)):
                cells[:, i] = rng.choice(law.size, size=size, p=law.ravel())
            return np.divmod(cells, self.y_size)
        if self.kind == "two_symbolwise":
            cells = rng.choice(self.joint.size, size=(size, n // 2), p=self.joint.ravel())
            u, v = np.divmod(cells, self.y_size**2)
            xs = np.empty((size, n), dtype=np.int64)
            ys = np.empty((size, n), dtype=np.int64)
            xs[:, 0::2], xs[:, 1::2] = np.divmod(u, self.x_size)
            ys[:, 0::2], ys[:, 1::2] = np.divmod(v, self.y_size)
            return xs, ys
        if self.kind == "mixture":
            which = rng.choice(len(self.components), size=size, p=np.array(self.weights))
            xs = np.empty((size, n), dtype=np.int64)
            ys = np.empty((size, n), dtype=np.int64)
            for k, comp in enumerate(self.components):
                idx = np.nonzero(which == k)[0]
                if idx.size:
                    xs[idx], ys[idx] = comp.sample(n, idx.size, rng)
            return xs, ys
        s = np.empty((size, n), dtype=np.int64)
        s[:, 0] = rng.choice(self.pair_size, size=size, p=self.initial)
        cdf = np.cumsum(self.transition, axis=1)
        for i in range(1, n):
            u = rng.random(size)
            s[:, i] = np.minimum((cdf[s[:, i - 1]] < u[:, None]).sum(axis=1), self.pair_size - 1)
        return np.divmod(s, self.y_size)


# --------------------------------------------------------------------------
# smoothness


@dataclass(frozen=True)
class SmoothnessVerdict:
    """Finite-n smoothness certificate; ``q`` is 0 when the source is not smooth."""

    block_length_checked: int
    q_X: float
    q_Y: float
    weak_q_Y: float
    closed_form_q: Optional[float] = None
    weak_witness: Optional[tuple] = None

    @property
    def smooth_wrt_X(self):
        return self.q_X > 0

    @property
    def smooth_wrt_Y(self):
        return self.q_Y > 0

    @property
    def weakly_smooth_wrt_Y(self):
        return self.weak_q_Y > 0

    @property
    def q(self):
        return min(self.q_X, self.q_Y)

    def to_dict(self):
        d = {
            "block_length_checked": self.block_length_checked,
            "smooth_wrt_X": self.smooth_wrt_X,
            "smooth_wrt_Y": self.smooth_wrt_Y,
            "weakly_smooth_wrt_Y": self.weakly_smooth_wrt_Y,
            "q": self.q,
            "q_X": self.q_X,
            "q_Y": self.q_Y,
            "weak_q_Y": self.weak_q_Y,
            "closed_form_q": self.closed_form_q,
        }
        if self.weak_witness is not None:
            x, xh, y, i = self.weak_witness
            d["weak_witness"] = {"x": list(x), "x_hat": list(xh), "y": list(y), "position": i}
        return d


def _flip_ratio_min(table, n, size):
    """``min P(x, y_hat) / P(x, y)`` over single flips of the column word, ``P(x, y) > 0``."""
    if size < 2:
        return 1.0
    flips = _words.flip_table(size, n)
    pos = table > 0
    best = np.inf
    for i in range(n):
        for k in range(1, size):
            moved = table[:, flips[:, i, k]]
            if np.any(pos & (moved == 0)):
                return 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(pos, moved / np.where(pos, table, 1.0), np.inf)
            best = min(best, float(r.min()))
    return 1.0 if best == np.inf else best


def certified_q(source: SourceModel, n, wrt="Y"):
    """Exact largest ``q`` with ``P(x, y_hat) >= q P(x, y)`` over all single flips at length ``n``."""
    table = source.block_table(n)
    check_budget(table.size * n * max(source.x_size, source.y_size), source.budget)
    if wrt == "Y":
        return _flip_ratio_min(table, n, source.y_size)
    if wrt == "X":
        return _flip_ratio_min(table.T, n, source.x_size)
    raise ValueError("wrt must be 'X' or 'Y'")


def _letter_q(law, wrt):
    t = law if wrt == "Y" else law.T
    best = np.inf
    for row in t:
        pos = row[row > 0]
        if pos.size == 0:
            continue
        if pos.size < row.size:
            return 0.0
        if row.size > 1:
            best = min(best, row.min() / row.max())
    return 1.0 if best == np.inf else float(best)


def _pair_q(pair, x_size, y_size, wrt):
    # one-position flips inside a super-symbol
    p4 = pair.reshape(x_size, x_size, y_size, y_size)
    if wrt == "X":
        p4 = p4.transpose(2, 3, 0, 1)
        x_size, y_size = y_size, x_size
    best = np.inf
    for a1 in range(x_size):
        for a2 in range(x_size):
            block = p4[a1, a2]
            for b1 in range(y_size):
                for b2 in range(y_size):
                    p = block[b1, b2]
                    if p <= 0:
                        continue
                    for c in range(y_size):
                        for moved in ((c, b2), (b1, c)):
                            if moved != (b1, b2):
                                best = min(best, block[moved] / p)
    return 1.0 if best == np.inf else float(best)


def closed_form_q(source: SourceModel, wrt="Y") -> Optional[float]:
    """Model-level smoothness constant valid at every block length, or ``None`` if unavailable.

    i.i.d.: the smallest single-letter ratio (0 if the table has a zero).
    Markov: ``min(q1, q2)`` from two-step transition and initial products,
    defined for strictly positive chains. Mixture: the smallest component
    constant. ``wrt="both"`` returns the smaller of the two directions.
    """
    if wrt == "both":
        a, b = closed_form_q(source, "X"), closed_form_q(source, "Y")
        return None if a is None or b is None else min(a, b)
    if wrt not in ("X", "Y"):
        raise ValueError("wrt must be 'X', 'Y' or 'both'")
    if source.kind == "iid":
        return _letter_q(source.joint, wrt)
    if source.kind == "theorem9":
        return min(_letter_q(source.joint, wrt), 1.0) if source.rho > 0 else 1.0
    if source.kind == "two_symbolwise":
        return _pair_q(source.joint, source.x_size, source.y_size, wrt)
    if source.kind == "mixture":
        qs = [closed_form_q(c, wrt) for c in source.components]
        return None if any(q is None for q in qs) else min(qs)
    w, p0 = source.transition, source.initial
    if np.any(w <= 0) or np.any(p0 <= 0):
        return None
    # min over a, b, c of W(b|a) W(c|b)
    q1 = float((w.min(axis=0) * w.min(axis=1)).min())
    q2 = float((w * p0[:, None]).min())
    return min(q1, q2)


def weak_smoothness_check(source: SourceModel, n):
    """Largest ``q`` meeting the weak (one good flip) condition w.r.t. Y at length ``n``.

    Returns ``(q, witness)``; ``q == 0`` means not weakly smooth and the
    witness ``(x, x_hat, y, position)`` has no admissible flip. Vacuous
    premises give ``q = 1``.
    """
    table = source.block_table(n)
    nx, ny = table.shape
    ys = source.y_size
    check_budget(nx * nx * ny * n * max(1, ys - 1), source.budget)
    dx = _words.all_words(source.x_size, n)
    pos = table > 0
    best = 1.0
    if ys < 2:
        # no flip exists: any live premise fails
        for i in range(n):
            for x in range(nx):
                others = np.nonzero(dx[:, i] != dx[x, i])[0]
                live = pos[x][None, :] & pos[others]
                if live.any():
                    xh, y = others[np.argwhere(live)[0][0]], np.argwhere(live)[0][1]
                    return 0.0, _weak_witness(source, n, x, xh, y, i)
        return best, None
    flips = _words.flip_table(ys, n)
    safe = np.where(pos, table, 1.0)
    for i in range(n):
        ratios = np.stack(
            [np.where(pos, table[:, flips[:, i, k]] / safe, 0.0) for k in range(1, ys)],
            axis=-1,
        )  # (nx, ny, ys-1)
        for x in range(nx):
            others = np.nonzero(dx[:, i] != dx[x, i])[0]
            live = pos[x][None, :] & pos[others]
            if not live.any():
                continue
            good = np.minimum(ratios[x][None], ratios[others]).max(axis=-1)
            vals = np.where(live, good, np.inf)
            m = float(vals.min())
            if m <= 0:
                j, y = np.argwhere(live & (good <= 0))[0]
                return 0.0, _weak_witness(source, n, x, others[j], y, i)
            best = min(best, m)
    return best, None


def _weak_witness(source, n, x, xh, y, i):
    return (
        _words.index_to_word(int(x), source.x_size, n),
        _words.index_to_word(int(xh), source.x_size, n),
        _words.index_to_word(int(y), source.y_size, n),
        i + 1,
    )


def smoothness_check(source: SourceModel, n) -> SmoothnessVerdict:
    """Exhaustive certificate at length ``n`` plus the model-level closed form where one exists."""
    weak_q, witness = weak_smoothness_check(source, n)
    return SmoothnessVerdict(
        block_length_checked=n,
        q_X=certified_q(source, n, "X"),
        q_Y=certified_q(source, n, "Y"),
        weak_q_Y=weak_q,
        closed_form_q=closed_form_q(source, "both"),
        weak_witness=witness,
    )


def is_weakly_smooth_iid(joint):
    """Single-letter test: every pair of rows shares a positive column a number of times other than one.

    Returns ``(verdict, offending)`` where ``offending`` is ``(a1, a2, b)``.
    """
    p = np.asarray(joint, dtype=float)
    for a1 in range(p.shape[0]):
        for a2 in range(a1 + 1, p.shape[0]):
            shared = np.nonzero((p[a1] > 0) & (p[a2] > 0))[0]
            if shared.size == 1:
                return False, (a1, a2, int(shared[0]))
    return True, None


def require_smooth(source: SourceModel, n, wrt="Y"):
    """Return the certified ``q`` or refuse when the source is not smooth in that direction."""
    q = certified_q(source, n, wrt)
    if q <= 0:
        raise PreconditionError(
            f"smoothness with respect to {wrt}",
            f"some single-symbol flip of {wrt} turns a positive-probability pair into a null one at n={n}",
        )
    return q


# --------------------------------------------------------------------------
# two-symbol-wise counterexample template


@dataclass(frozen=True)
class TwoSymbolwiseTemplate:
    """Super-alphabet view of a symbol-wise function on consecutive pairs.

    ``g`` is the induced function on ``X^2 x Y^2``; ``collision`` holds the
    super-symbols ``(u, v, u_hat, v_hat)`` with ``g(u, v) = g(u_hat, v_hat)``,
    ``u != u_hat`` and ``v != v_hat``.
    """

    base: SingleLetterFunction
    quadruple: tuple
    g: SingleLetterFunction
    collision: tuple

    @property
    def super_shape(self):
        return (self.g.x_size, self.g.y_size)

    @property
    def breaks_hk_diagonal(self):
        u, v, uh, vh = self.collision
        return u != uh and v != vh and self.g(u, v) == self.g(uh, vh)

    def complete(self, pair_joint):
        """Attach a law on ``X^2 x Y^2`` and return the two-symbol-wise source."""
        return SourceModel.two_symbolwise(self.base.x_size, self.base.y_size, pair_joint)


def two_symbolwise_from_function(f: SingleLetterFunction, quadruple=None) -> TwoSymbolwiseTemplate:
    """Build the super-alphabet function induced by ``f`` on symbol pairs.

    ``quadruple`` defaults to :func:`counterexample_quadruple`; a supplied
    one is checked the same way.
    """
    expected = counterexample_quadruple(f)
    if quadruple is None:
        quadruple = expected
    quadruple = tuple(tuple(w) for w in quadruple)
    x, xh, y, yh = quadruple
    if (
        x == xh
        or y == yh
        or (f(x[0], y[0]), f(x[1], y[1])) != (f(xh[0], yh[0]), f(xh[1], yh[1]))
    ):
        raise PreconditionError("colliding pair of pairs", "supplied quadruple does not collide")
    xs, ys = f.x_size, f.y_size
    table = [
        [(f(u // xs, v // ys), f(u % xs, v % ys)) for v in range(ys * ys)]
        for u in range(xs * xs)
    ]
    g = SingleLetterFunction.from_array(table)
    collision = (x[0] * xs + x[1], y[0] * ys + y[1], xh[0] * xs + xh[1], yh[0] * ys + yh[1])
    template = TwoSymbolwiseTemplate(f, quadruple, g, collision)
    if not template.breaks_hk_diagonal or is_hk(g)[0]:
        raise AssertionError("induced function unexpectedly satisfies HK")  # pragma: no cover
    return template
