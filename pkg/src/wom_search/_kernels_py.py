"""Numpy implementations of the simulator kernels.

Used when the compiled extension is unavailable.  Results are identical to
the Cython versions element for element.
"""
import numpy as np


def sample_friends(u: np.ndarray) -> np.ndarray:
    """k distinct friends per consumer, self excluded (Floyd's algorithm).

    Vectorized over consumers; loops over the ``k`` draws.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    n, k = u.shape
    pool = n - 1
    if k > pool:
        raise ValueError("k must be smaller than the population")
    sel = np.empty((n, k), dtype=np.int64)
    for idx in range(k):
        j = pool - k + idx
        t = np.minimum((u[:, idx] * (j + 1)).astype(np.int64), j)
        if idx:
            dup = (sel[:, :idx] == t[:, None]).any(axis=1)
            t = np.where(dup, j, t)
        sel[:, idx] = t
    sel += sel >= np.arange(n, dtype=np.int64)[:, None]
    return sel


def friend_quote_mask(searched: np.ndarray, friends: np.ndarray) -> np.ndarray:
    """Bit mask of firms (bit 0: firm A, bit 1: firm B) quoted by friends."""
    s = searched[friends]
    a = (s == 0).any(axis=1)
    b = (s == 1).any(axis=1)
    return (a.astype(np.uint8) | (b.astype(np.uint8) << 1)).astype(np.uint8)
