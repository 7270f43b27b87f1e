"""Compiled window-maximum kernels.

Pair convention shared by all kernels: a pair ``(s, tau)`` is admissible when
``0 <= s <= s_max``, ``tau_lo <= tau <= tau_hi`` and ``s + tau <= len(v) - 1``;
its value is ``v[s + tau] - v[s]``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def window_max(v, tau_lo, tau_hi, s_max):
    # Sliding minimum over left endpoints with a monotone queue of indices.
    n = v.shape[0]
    last = min(s_max + tau_hi, n - 1)
    q = np.empty(min(s_max, n - 1) + 1, dtype=np.int64)
    head = 0
    tail = 0
    best = -np.inf
    for j in range(tau_lo, last + 1):
        i = j - tau_lo
        if i <= s_max:
            x = v[i]
            while tail > head and v[q[tail - 1]] >= x:
                tail -= 1
            q[tail] = i
            tail += 1
        while head < tail and q[head] < j - tau_hi:
            head += 1
        if head < tail:
            cand = v[j] - v[q[head]]
            if cand > best:
                best = cand
    return best


@njit(cache=True)
def window_max_rows(paths, tau_lo, tau_hi, s_max):
    out = np.empty(paths.shape[0])
    for r in range(paths.shape[0]):
        out[r] = window_max(paths[r], tau_lo, tau_hi, s_max)
    return out


@njit(cache=True)
def window_max_rows_multi(paths, tau_lo, tau_his, s_max):
    out = np.empty((paths.shape[0], tau_his.shape[0]))
    for r in range(paths.shape[0]):
        for c in range(tau_his.shape[0]):
            out[r, c] = window_max(paths[r], tau_lo, tau_his[c], s_max)
    return out


@njit(cache=True)
def standardized_max(v, tau_lo, tau_hi, s_max, scale):
    # scale[tau] = (tau*dt)^H; direct scan since the normalisation depends on tau.
    n = v.shape[0]
    best = -np.inf
    for s in range(0, min(s_max, n - 1) + 1):
        top = min(tau_hi, n - 1 - s)
        for tau in range(tau_lo, top + 1):
            cand = (v[s + tau] - v[s]) / scale[tau]
            if cand > best:
                best = cand
    return best


@njit(cache=True)
def standardized_max_rows(paths, tau_lo, tau_hi, s_max, scale):
    out = np.empty(paths.shape[0])
    for r in range(paths.shape[0]):
        out[r] = standardized_max(paths[r], tau_lo, tau_hi, s_max, scale)
    return out
