"""Indexing of words in A^n.

A word ``(w_1, ..., w_n)`` is identified with the integer
``sum_i w_i * size**(n - 1 - i)``, so the first position is the most
significant digit and lexicographic order equals index order.
"""

from functools import lru_cache

import numpy as np


def word_to_index(word, size):
    idx = 0
    for s in word:
        s = int(s)
        if not 0 <= s < size:
            raise ValueError(f"symbol {s} outside alphabet of size {size}")
        idx = idx * size + s
    return idx


def index_to_word(index, size, n):
    out = [0] * n
    for i in range(n - 1, -1, -1):
        index, out[i] = divmod(index, size)
    return tuple(out)


@lru_cache(maxsize=64)
def _digits(size, n):
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.unravel_index(np.arange(size**n), (size,) * n)
    d = np.stack(grids, axis=1).astype(np.int64)
    d.setflags(write=False)
    return d


def all_words(size, n):
    """Array of shape ``(size**n, n)``; row ``k`` is the word with index ``k``."""
    return _digits(size, n)


def indices_of(words, size):
    """Vectorised inverse of :func:`all_words` for an ``(N, n)`` integer array."""
    words = np.asarray(words, dtype=np.int64)
    n = words.shape[1]
    weights = size ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return words @ weights


@lru_cache(maxsize=64)
def _flip_table(size, n):
    # flip[w, i, k] = index of w with position i replaced by (w_i + k) mod size
    d = _digits(size, n)
    idx = np.arange(size**n)
    out = np.empty((size**n, n, size), dtype=np.int64)
    for i in range(n):
        place = size ** (n - 1 - i)
        for k in range(size):
            new = (d[:, i] + k) % size
            out[:, i, k] = idx + (new - d[:, i]) * place
    out.setflags(write=False)
    return out


def flip_table(size, n):
    """Indices of all Hamming-1 neighbours, see ``_flip_table``.

    ``k = 0`` gives the word itself.
    """
    return _flip_table(size, n)


def hamming(a, b):
    return sum(1 for s, t in zip(a, b) if s != t)
