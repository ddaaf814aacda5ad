"""Finite functions on X^n x Y^n and their sensitivity classes.

Every decision procedure here is exhaustive: a universal statement over
all words is only certified by enumerating them, so checks refuse with
:class:`~distcomp.errors.BudgetExceeded` instead of sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Optional

import numpy as np

from . import _words
from .errors import DEFAULT_BUDGET, PreconditionError, check_budget
from .matching import maximum_matching


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class SingleLetterFunction:
    """A table ``f: X x Y -> Z`` with ``X = {0..x_size-1}``, ``Y = {0..y_size-1}``."""

    x_size: int
    y_size: int
    table: tuple

    def __post_init__(self):
        if self.x_size < 1 or self.y_size < 1:
            raise ValueError("alphabet sizes must be at least 1")
        rows = tuple(tuple(_freeze(z) for z in row) for row in self.table)
        if len(rows) != self.x_size or any(len(r) != self.y_size for r in rows):
            raise ValueError(
                f"table must be {self.x_size} x {self.y_size} (row-major in x)"
            )
        object.__setattr__(self, "table", rows)

    @classmethod
    def from_array(cls, table):
        table = [list(r) for r in table]
        return cls(len(table), len(table[0]), tuple(tuple(r) for r in table))

    def __call__(self, x, y):
        return self.table[x][y]

    @property
    def image(self):
        seen = {}
        for row in self.table:
            for z in row:
                seen.setdefault(z, None)
        return tuple(seen)

    @cached_property
    def codes(self):
        """Table as dense integer labels, numbered by first appearance."""
        index = {z: k for k, z in enumerate(self.image)}
        return np.array([[index[z] for z in row] for row in self.table], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class VectorFunction:
    """A function ``f_n`` on ``X^n x Y^n``.

    ``evaluate`` takes two length-``n`` tuples. The integer table (rows are
    x-word indices, columns y-word indices) and the label list are built
    on first use.
    """

    n: int
    x_size: int
    y_size: int
    evaluate: Callable[[tuple, tuple], Hashable]
    origin: str = "explicit"
    base: Optional[SingleLetterFunction] = None
    params: dict = field(default_factory=dict)
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("block length must be positive")
        if self.x_size < 1 or self.y_size < 1:
            raise ValueError("alphabet sizes must be at least 1")

    def __call__(self, x, y):
        x, y = tuple(x), tuple(y)
        if len(x) != self.n or len(y) != self.n:
            raise ValueError("word length does not match block length")
        return self.evaluate(x, y)

    @property
    def nx(self):
        return self.x_size**self.n

    @property
    def ny(self):
        return self.y_size**self.n

    @cached_property
    def _tabulated(self):
        check_budget(self.nx * self.ny, self.budget)
        builder = _TABLE_BUILDERS.get(self.origin)
        if builder is not None:
            return builder(self)
        xs = [_words.index_to_word(i, self.x_size, self.n) for i in range(self.nx)]
        ys = [_words.index_to_word(j, self.y_size, self.n) for j in range(self.ny)]
        index = {}
        table = np.empty((self.nx, self.ny), dtype=np.int64)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                z = _freeze(self.evaluate(x, y))
                table[i, j] = index.setdefault(z, len(index))
        return table, tuple(index)

    @property
    def table(self):
        return self._tabulated[0]

    @property
    def labels(self):
        return self._tabulated[1]

    @cached_property
    def label_index(self):
        return {z: k for k, z in enumerate(self.labels)}


def _freeze(z):
    if isinstance(z, list):
        return tuple(_freeze(v) for v in z)
    if isinstance(z, tuple):
        return tuple(_freeze(v) for v in z)
    if isinstance(z, np.generic):
        return z.item()
    return z


def _symbolwise_table(fn):
    base = fn.base
    codes = base.codes
    nlab = len(base.image)
    dx = _words.all_words(fn.x_size, fn.n)
    dy = _words.all_words(fn.y_size, fn.n)
    combined = np.zeros((fn.nx, fn.ny), dtype=np.int64)
    for i in range(fn.n):
        combined = combined * nlab + codes[dx[:, i][:, None], dy[:, i][None, :]]
    uniq, inv = np.unique(combined, return_inverse=True)
    image = base.image
    labels = []
    for c in uniq:
        digits = []
        for _ in range(fn.n):
            c, r = divmod(int(c), nlab)
            digits.append(image[r])
        labels.append(tuple(reversed(digits)))
    return inv.reshape(fn.nx, fn.ny), tuple(labels)


def _theorem9_table(fn):
    p = fn.params["p"]
    m = fn.params["sum_len"]
    xs, ys = fn.x_size, fn.y_size
    dx = _words.all_words(xs, fn.n)
    dy = _words.all_words(ys, fn.n)
    combined = np.zeros((fn.nx, fn.ny), dtype=np.int64)
    for i in range(fn.n):
        if i < m:
            sym = (dx[:, i][:, None] + dy[:, i][None, :]) % p
            combined = combined * p + sym
        else:
            sym = dx[:, i][:, None] * ys + dy[:, i][None, :]
            combined = combined * (xs * ys) + sym
    uniq, inv = np.unique(combined, return_inverse=True)
    labels = []
    for c in uniq:
        c = int(c)
        parts = []
        for i in range(fn.n - 1, -1, -1):
            if i < m:
                c, r = divmod(c, p)
                parts.append(("s", r))
            else:
                c, r = divmod(c, xs * ys)
                parts.append(("p", divmod(r, ys)))
        labels.append(tuple(reversed(parts)))
    return inv.reshape(fn.nx, fn.ny), tuple(labels)


def _identity_table(fn):
    table = np.arange(fn.nx * fn.ny, dtype=np.int64).reshape(fn.nx, fn.ny)
    labels = tuple(
        (_words.index_to_word(i, fn.x_size, fn.n), _words.index_to_word(j, fn.y_size, fn.n))
        for i in range(fn.nx)
        for j in range(fn.ny)
    )
    return table, labels


_TABLE_BUILDERS = {
    "symbolwise": _symbolwise_table,
    "theorem9": _theorem9_table,
    "identity": _identity_table,
}


# --------------------------------------------------------------------------
# constructors


def lift_symbolwise(f: SingleLetterFunction, n: int) -> VectorFunction:
    """Componentwise lift ``f_n(x, y) = (f(x_1, y_1), ..., f(x_n, y_n))``."""
    if n < 1:
        raise ValueError("block length must be positive")

    def evaluate(x, y):
        return tuple(f.table[a][b] for a, b in zip(x, y))

    return VectorFunction(n, f.x_size, f.y_size, evaluate, origin="symbolwise", base=f)


def identity_function(n, x_size, y_size):
    """``f_n(x, y) = (x, y)``: computing it is Slepian-Wolf coding."""
    return VectorFunction(n, x_size, y_size, lambda x, y: (x, y), origin="identity")


def from_callable(n, x_size, y_size, func):
    return VectorFunction(n, x_size, y_size, func, origin="explicit")


def joint_type_function(n, x_size, y_size):
    """Joint type of ``(x, y)`` as a tuple of counts (row-major over X x Y)."""

    def evaluate(x, y):
        counts = [0] * (x_size * y_size)
        for a, b in zip(x, y):
            counts[a * y_size + b] += 1
        return tuple(counts)

    return from_callable(n, x_size, y_size, evaluate)


def comparison_function(n, size):
    """``(>, x)``, ``(=, x)`` or ``(<, y)`` under lexicographic order on words."""

    def evaluate(x, y):
        if x > y:
            return (">", x)
        if x == y:
            return ("=", x)
        return ("<", y)

    return from_callable(n, size, size, evaluate)


def type_and_comparison_function(n, size):
    """Pair of the joint type and :func:`comparison_function`; totally sensitive."""
    jt = joint_type_function(n, size, size).evaluate
    cmp = comparison_function(n, size).evaluate
    return from_callable(n, size, size, lambda x, y: (jt(x, y), cmp(x, y)))


def smallest_prime_above(k):
    """Smallest prime strictly larger than ``k``."""
    c = max(2, k + 1)
    while any(c % d == 0 for d in range(2, math.isqrt(c) + 1)):
        c += 1
    return c


def sum_length(n, rho):
    """Number of leading GF(p)-sum coordinates, ``floor(n * rho)``."""
    return math.floor(round(n * rho, 9))


def theorem9_function(x_size, y_size, n, rho) -> VectorFunction:
    """Mixed modulo-sum / identity function.

    The first ``floor(n*rho)`` coordinates output ``x_i + y_i`` in GF(p) with
    ``p`` the smallest prime above ``x_size + y_size - 2``; the rest output
    the pair ``(x_i, y_i)``. Labels are tagged tuples ``("s", v)`` and
    ``("p", (x_i, y_i))``.
    """
    if x_size < 1 or y_size < 1:
        raise ValueError("alphabet sizes must be at least 1")
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    p = smallest_prime_above(x_size + y_size - 2)
    m = sum_length(n, rho)

    def evaluate(x, y):
        head = tuple(("s", (a + b) % p) for a, b in zip(x[:m], y[:m]))
        tail = tuple(("p", (a, b)) for a, b in zip(x[m:], y[m:]))
        return head + tail

    return VectorFunction(
        n, x_size, y_size, evaluate, origin="theorem9",
        params={"p": p, "sum_len": m, "rho": rho},
    )


# --------------------------------------------------------------------------
# sensitivity checks


@dataclass(frozen=True)
class SensitivityWitness:
    """A violating tuple. ``position`` is 1-based; ``b2`` only for high sensitivity."""

    x: tuple
    x_hat: tuple
    y: tuple
    y_hat: Optional[tuple] = None
    position: Optional[int] = None
    b2: Optional[int] = None


@dataclass(frozen=True)
class SensitivityReport:
    sensitive_given_Y: bool
    sensitive_given_X: bool
    jointly_sensitive: bool
    highly_sensitive_given_Y: bool
    highly_sensitive_given_X: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def totally_sensitive(self):
        return self.jointly_sensitive and self.sensitive_given_X and self.sensitive_given_Y

    @property
    def highly_totally_sensitive(self):
        return (
            self.jointly_sensitive
            and self.highly_sensitive_given_X
            and self.highly_sensitive_given_Y
        )

    def to_dict(self):
        return {
            "sensitive_given_Y": self.sensitive_given_Y,
            "sensitive_given_X": self.sensitive_given_X,
            "jointly_sensitive": self.jointly_sensitive,
            "totally_sensitive": self.totally_sensitive,
            "highly_sensitive_given_Y": self.highly_sensitive_given_Y,
            "highly_sensitive_given_X": self.highly_sensitive_given_X,
            "witnesses": {
                k: _witness_dict(w) for k, w in sorted(self.witnesses.items())
            },
        }


def _witness_dict(w):
    d = {"x": list(w.x), "x_hat": list(w.x_hat), "y": list(w.y)}
    if w.y_hat is not None:
        d["y_hat"] = list(w.y_hat)
    if w.position is not None:
        d["position"] = w.position
    if w.b2 is not None:
        d["b2"] = w.b2
    return d


def _conditional_scan(table, n, a_size, b_size, budget, high):
    """Scan collisions ``T[a, b] == T[a', b]`` and try to break them by flipping b.

    Returns ``None`` or ``(a, a_hat, b, i, k)`` where ``k`` is the failing flip
    offset (high sensitivity) or ``None``.
    """
    na, nb = table.shape
    check_budget(na * na * nb * max(1, n * (b_size - 1)), budget)
    if b_size < 2:
        # no flip can ever break a collision
        for a in range(na):
            hits = np.nonzero((table[a][None, :] == table) & (np.arange(na) != a)[:, None])
            for a2, b in zip(*hits):
                da = _words.index_to_word(a, a_size, n)
                da2 = _words.index_to_word(int(a2), a_size, n)
                i = next(k for k in range(n) if da[k] != da2[k])
                return a, int(a2), int(b), i, None
        return None
    da = _words.all_words(a_size, n)
    flips = _words.flip_table(b_size, n)
    for a in range(na):
        coll = table[a][None, :] == table  # (na, nb): T[a2, b] == T[a, b]
        coll[a] = False
        if not coll.any():
            continue
        for i in range(n):
            diff = da[:, i] != da[a, i]
            cand = coll & diff[:, None]
            if not cand.any():
                continue
            broken_any = np.zeros_like(cand)
            broken_all = np.ones_like(cand)
            first_fail = np.full(cand.shape, -1, dtype=np.int64)
            for k in range(1, b_size):
                nbr = flips[:, i, k]
                neq = table[a][nbr][None, :] != table[:, nbr]
                broken_any |= neq
                newly = (~neq) & (first_fail < 0)
                first_fail[newly] = k
                broken_all &= neq
            bad = cand & (~broken_all if high else ~broken_any)
            if bad.any():
                a2, b = np.argwhere(bad)[0]
                k = int(first_fail[a2, b]) if high else None
                return a, int(a2), int(b), i, k
    return None


def _sensitivity(fn, given, high):
    if fn.origin == "identity":
        return True, None
    if fn.origin == "symbolwise" and fn.n > 1:
        # other coordinates can be held equal, so one letter decides
        ok, w = _sensitivity(lift_symbolwise(fn.base, 1), given, high)
        if ok:
            return True, None
        pad = (0,) * (fn.n - 1)
        ext = lambda word: None if word is None else word + pad  # noqa: E731
        return False, SensitivityWitness(
            x=ext(w.x), x_hat=ext(w.x_hat), y=ext(w.y), y_hat=ext(w.y_hat),
            position=w.position, b2=w.b2,
        )
    if given == "Y":
        hit = _conditional_scan(fn.table, fn.n, fn.x_size, fn.y_size, fn.budget, high)
        if hit is None:
            return True, None
        a, a2, b, i, k = hit
        x = _words.index_to_word(a, fn.x_size, fn.n)
        xh = _words.index_to_word(a2, fn.x_size, fn.n)
        y = _words.index_to_word(b, fn.y_size, fn.n)
        return False, _make_witness(x, xh, y, i, k, fn.y_size)
    hit = _conditional_scan(fn.table.T, fn.n, fn.y_size, fn.x_size, fn.budget, high)
    if hit is None:
        return True, None
    a, a2, b, i, k = hit
    # roles swapped: the colliding pair lives in Y^n, the flipped word in X^n
    y = _words.index_to_word(a, fn.y_size, fn.n)
    yh = _words.index_to_word(a2, fn.y_size, fn.n)
    x = _words.index_to_word(b, fn.x_size, fn.n)
    w = _make_witness(y, yh, x, i, k, fn.x_size)
    return False, SensitivityWitness(
        x=w.y, x_hat=w.y_hat, y=w.x, y_hat=w.x_hat, position=w.position, b2=w.b2
    )


def _make_witness(x, xh, y, i, k, b_size):
    b2 = None
    y_hat = None
    if k is not None:
        b2 = (y[i] + k) % b_size
        y_hat = y[:i] + (b2,) + y[i + 1:]
    return SensitivityWitness(x=x, x_hat=xh, y=y, y_hat=y_hat, position=i + 1, b2=b2)


def is_sensitive_given_Y(fn: VectorFunction):
    """Every collision over ``y`` with ``x_i != x_hat_i`` is broken by some flip of ``y_i``.

    Returns ``(verdict, witness)``; the witness is ``None`` when the verdict is true.
    """
    return _sensitivity(fn, "Y", high=False)


def is_sensitive_given_X(fn: VectorFunction):
    """Mirror image of :func:`is_sensitive_given_Y`.

    The witness reports the colliding pair as ``(y, y_hat)`` and the fixed
    word as ``x``.
    """
    return _sensitivity(fn, "X", high=False)


def is_highly_sensitive_given_Y(fn: VectorFunction):
    """Like :func:`is_sensitive_given_Y`, but *every* flip of ``y_i`` must break the collision."""
    return _sensitivity(fn, "Y", high=True)


def is_highly_sensitive_given_X(fn: VectorFunction):
    return _sensitivity(fn, "X", high=True)


def is_jointly_sensitive(fn: VectorFunction):
    """``f_n(x, y) != f_n(x', y')`` whenever ``x != x'`` and ``y != y'``.

    A fiber is free of such pairs exactly when all its pairs share the
    same ``x`` or all share the same ``y``, which makes the check linear
    in the table size.
    """
    check_budget(fn.nx * fn.ny, fn.budget)
    t = fn.table.ravel()
    rows = np.repeat(np.arange(fn.nx), fn.ny)
    cols = np.tile(np.arange(fn.ny), fn.nx)
    nlab = len(fn.labels)
    n_x = np.bincount(np.unique(t * fn.nx + rows) // fn.nx, minlength=nlab)
    n_y = np.bincount(np.unique(t * fn.ny + cols) // fn.ny, minlength=nlab)
    bad = np.nonzero((n_x >= 2) & (n_y >= 2))[0]
    if bad.size == 0:
        return True, None
    z = bad[0]
    pairs = np.argwhere(fn.table == z)
    x1, y1 = pairs[0]
    both = pairs[(pairs[:, 0] != x1) & (pairs[:, 1] != y1)]
    if both.size:
        (xa, ya), (xb, yb) = (x1, y1), both[0]
    else:
        (xa, ya) = pairs[pairs[:, 0] != x1][0]
        (xb, yb) = pairs[pairs[:, 1] != y1][0]
    return False, SensitivityWitness(
        x=_words.index_to_word(int(xa), fn.x_size, fn.n),
        x_hat=_words.index_to_word(int(xb), fn.x_size, fn.n),
        y=_words.index_to_word(int(ya), fn.y_size, fn.n),
        y_hat=_words.index_to_word(int(yb), fn.y_size, fn.n),
    )


def is_totally_sensitive(fn: VectorFunction) -> SensitivityReport:
    """Run every check and collect witnesses for the failing ones."""
    checks = {
        "sensitive_given_Y": is_sensitive_given_Y,
        "sensitive_given_X": is_sensitive_given_X,
        "jointly_sensitive": is_jointly_sensitive,
        "highly_sensitive_given_Y": is_highly_sensitive_given_Y,
        "highly_sensitive_given_X": is_highly_sensitive_given_X,
    }
    flags, witnesses = {}, {}
    for name, check in checks.items():
        ok, w = check(fn)
        flags[name] = ok
        if w is not None:
            witnesses[name] = w
    return SensitivityReport(witnesses=witnesses, **flags)


# --------------------------------------------------------------------------
# single-letter criteria


def is_hk(f: SingleLetterFunction):
    """Check the three conditions: distinct rows, distinct columns, no diagonal collision.

    Returns ``(verdict, condition, witness)`` where ``condition`` is 1, 2 or 3
    for the first failing condition.
    """
    t = f.table
    for a1 in range(f.x_size):
        for a2 in range(a1 + 1, f.x_size):
            if t[a1] == t[a2]:
                return False, 1, {"a1": a1, "a2": a2}
    cols = [tuple(t[a][b] for a in range(f.x_size)) for b in range(f.y_size)]
    for b1 in range(f.y_size):
        for b2 in range(b1 + 1, f.y_size):
            if cols[b1] == cols[b2]:
                return False, 2, {"b1": b1, "b2": b2}
    for a1 in range(f.x_size):
        for a2 in range(f.x_size):
            if a1 == a2:
                continue
            for b1 in range(f.y_size):
                for b2 in range(f.y_size):
                    if b1 != b2 and t[a1][b1] == t[a2][b2]:
                        return False, 3, {"a1": a1, "b1": b1, "a2": a2, "b2": b2}
    return True, None, None


def _row_collision(f):
    for a in range(f.x_size):
        for b1 in range(f.y_size):
            for b2 in range(b1 + 1, f.y_size):
                if f.table[a][b1] == f.table[a][b2]:
                    return a, b1, b2
    return None


def _column_collision(f):
    for b in range(f.y_size):
        for a1 in range(f.x_size):
            for a2 in range(a1 + 1, f.x_size):
                if f.table[a1][b] == f.table[a2][b]:
                    return a1, a2, b
    return None


def symbolwise_totally_sensitive(f: SingleLetterFunction):
    """Single-letter criterion for total sensitivity of the lift (n >= 2).

    HK and (every row injective, or every column injective). Returns
    ``(verdict, properties)`` with ``properties`` the tuple of satisfied
    injectivity properties among ``(1, 2)``.
    """
    hk, _, _ = is_hk(f)
    props = tuple(
        k for k, hit in ((1, _row_collision(f)), (2, _column_collision(f))) if hit is None
    )
    return hk and bool(props), props


def counterexample_quadruple(f: SingleLetterFunction):
    """Build ``(x2, x2_hat, y2, y2_hat)`` with equal lifted values for an HK ``f`` failing both properties.

    From a row collision ``f(a0, b1) = f(a0, b2)`` and a column collision
    ``f(a1, b0) = f(a2, b0)``, the column-collision coordinate is placed
    first: ``x2 = (a1, a0)``, ``x2_hat = (a2, a0)``, ``y2 = (b0, b1)``,
    ``y2_hat = (b0, b2)``.
    """
    hk, cond, _ = is_hk(f)
    if not hk:
        raise PreconditionError("HK function", f"condition {cond} fails")
    row = _row_collision(f)
    col = _column_collision(f)
    if row is None or col is None:
        raise PreconditionError(
            "failure of both injectivity properties",
            "every row is injective" if row is None else "every column is injective",
        )
    a0, b1, b2 = row
    a1, a2, b0 = col
    quad = ((a1, a0), (a2, a0), (b0, b1), (b0, b2))
    x, xh, y, yh = quad
    lhs = (f(x[0], y[0]), f(x[1], y[1]))
    rhs = (f(xh[0], yh[0]), f(xh[1], yh[1]))
    if x == xh or y == yh or lhs != rhs:
        raise AssertionError("constructed quadruple does not collide")  # pragma: no cover
    return quad


# --------------------------------------------------------------------------
# EQ and r-total sensitivity


def _matching_size(xs, ys):
    adj = {}
    for x, y in zip(xs.tolist(), ys.tolist()):
        adj.setdefault(x, []).append(y)
    return len(maximum_matching(adj))


def _fiber_matching(fn, code):
    xs, ys = np.nonzero(fn.table == code)
    return _matching_size(xs, ys)


def eq_count(fn: VectorFunction, z) -> int:
    """Largest set of pairs in the fiber of ``z`` with distinct x's and distinct y's.

    Labels outside the image give 0.
    """
    code = fn.label_index.get(_freeze(z))
    if code is None:
        return 0
    return _fiber_matching(fn, code)


def eq_profile(fn: VectorFunction):
    """``{label: EQ(label)}`` over the whole image."""
    flat = fn.table.ravel()
    nlab = len(fn.labels)
    xs_all, ys_all = np.divmod(np.arange(flat.size), fn.table.shape[1])
    size = np.bincount(flat, minlength=nlab)
    # distinct x's and y's per fiber; when either is 1, or both equal the
    # fiber size, the matching is immediate
    dx = np.bincount(np.unique(flat * fn.table.shape[0] + xs_all) // fn.table.shape[0], minlength=nlab)
    dy = np.bincount(np.unique(flat * fn.table.shape[1] + ys_all) // fn.table.shape[1], minlength=nlab)
    eq = np.where((dx == size) & (dy == size), size, 0)
    eq[(dx == 1) | (dy == 1)] = 1
    hard = np.flatnonzero(eq == 0)
    if hard.size:
        mask = np.isin(flat, hard)
        idx = np.flatnonzero(mask)
        order = idx[np.argsort(flat[idx], kind="stable")]
        cuts = np.flatnonzero(np.diff(flat[order])) + 1
        for group in np.split(order, cuts):
            eq[flat[group[0]]] = _matching_size(xs_all[group], ys_all[group])
    return {z: int(eq[k]) for k, z in enumerate(fn.labels)}


def max_eq_rate(fn: VectorFunction) -> float:
    """``(1/n) log2 max_z EQ(z)``; 0 for totally sensitive functions."""
    best = max(eq_profile(fn).values())
    return math.log2(best) / fn.n
