"""Row reduction over F_p on dense numpy integer arrays."""
from __future__ import annotations

import numpy as np


def rref(a: np.ndarray, p: int, ncols: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` mod p.

    Pivots are searched only in the first ``ncols`` columns (default: all),
    left to right, taking the topmost usable row.  Returns the nonzero rows
    and the pivot column list.
    """
    m = np.array(a, dtype=np.int64) % p
    rows, cols = m.shape
    ncols = cols if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = m[r] * pow(int(m[r, c]), -1, p) % p
        col = m[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            m[hit] = (m[hit] - np.outer(col[hit], m[r])) % p
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(a: np.ndarray, p: int) -> int:
    if a.size == 0:
        return 0
    return len(rref(a, p)[1])


def nullspace(a: np.ndarray, p: int) -> list[np.ndarray]:
    """Basis of ``{v : a v = 0}``, one vector per free column, in column order.

    The vector for free column f is 1 at f and supported otherwise on pivot
    columns left of f.
    """
    cols = a.shape[1]
    if a.shape[0] == 0:
        reduced, pivots = np.zeros((0, cols), dtype=np.int64), []
    else:
        reduced, pivots = rref(a, p)
    pivot_set = set(pivots)
    basis = []
    for f in range(cols):
        if f in pivot_set:
            continue
        v = np.zeros(cols, dtype=np.int64)
        v[f] = 1
        for i, c in enumerate(pivots):
            if c < f:
                v[c] = (-reduced[i, f]) % p
        basis.append(v)
    return basis


def solve(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray | None:
    """One solution of ``a x = b`` (free variables set to 0), or None."""
    rows, cols = a.shape
    aug = np.zeros((rows, cols + 1), dtype=np.int64)
    aug[:, :cols] = a
    aug[:, cols] = b
    reduced, pivots = rref(aug, p, ncols=cols + 1)
    if pivots and pivots[-1] == cols:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(pivots):
        x[c] = reduced[i, cols]
    return x
