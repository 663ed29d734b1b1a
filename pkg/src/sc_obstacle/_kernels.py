"""Compiled projected SOR sweeps for the box-constrained quadratic problems."""

import numba
import numpy as np


@numba.njit(cache=True)
def psor_1d(v, kl, kr, rhs, lo, hi, omega, max_sweeps, tol):
    """Projected SOR for a tridiagonal system with couplings `kl`, `kr`.

    Node ``i`` minimises ``kl[i] (v_i - v_{i-1})^2 + kr[i] (v_i - v_{i+1})^2
    - 2 rhs[i] v_i`` (halved edge terms), clamped to ``[lo, hi]``. Returns
    ``(sweeps, last_max_update)``; ``sweeps`` is negative when the budget ran
    out.
    """
    n = v.size
    mx = np.inf
    for it in range(max_sweeps):
        mx = 0.0
        for i in range(n):
            s = rhs[i]
            if i > 0:
                s += kl[i] * v[i - 1]
            if i < n - 1:
                s += kr[i] * v[i + 1]
            target = s / (kl[i] + kr[i])
            new = v[i] + omega * (target - v[i])
            if new < lo:
                new = lo
            elif new > hi:
                new = hi
            du = abs(new - v[i])
            if du > mx:
                mx = du
            v[i] = new
        if mx < tol:
            return it + 1, mx
    return -max_sweeps, mx


@numba.njit(cache=True)
def psor_csr(v, indptr, indices, weights, diag, rhs, lo, hi, omega, max_sweeps, tol):
    """Projected SOR for ``sum_j w_ij (v_i - v_j) = rhs_i`` on a CSR graph."""
    n = v.size
    mx = np.inf
    for it in range(max_sweeps):
        mx = 0.0
        for i in range(n):
            s = rhs[i]
            for k in range(indptr[i], indptr[i + 1]):
                s += weights[k] * v[indices[k]]
            target = s / diag[i]
            new = v[i] + omega * (target - v[i])
            if new < lo:
                new = lo
            elif new > hi:
                new = hi
            du = abs(new - v[i])
            if du > mx:
                mx = du
            v[i] = new
        if mx < tol:
            return it + 1, mx
    return -max_sweeps, mx
