"""Compiled banded LU kernel.

Solutions of the platoon resolvent decay geometrically away from the
selected vehicles, so long chains drive entries into the subnormal range
where floating point slows down by two orders of magnitude. Entries below
``_FLUSH`` are set to zero; the absolute perturbation is far below double
precision resolution of any quantity that is later summed.
"""

import numba
import numpy as np

_FLUSH = 1e-280
_GRAM_FLOOR = 1e-150
_PIVOT_TAU = 0.1


@numba.njit(cache=True)
def _flush(z):
    if abs(z.real) < _FLUSH and abs(z.imag) < _FLUSH:
        return 0j
    return z


@numba.njit(cache=True)
def _cabs1(z):
    return abs(z.real) + abs(z.imag)


@numba.njit(cache=True)
def banded_lu_solve(ab, kl, ku, b, thresh):
    """Factor ``ab`` in place (LAPACK gbtf2 layout) and overwrite ``b``.

    Rows are swapped only when the diagonal entry is below a tenth of the
    column maximum. Strict partial pivoting on a lower-triangular band swaps
    at every step and leaves a spuriously tiny last pivot, while the plain
    triangular solve is accurate.

    ``ab`` has ``2*kl + ku + 1`` rows; entry ``(i, j)`` of the matrix lives
    in ``ab[kl + ku + i - j, j]``. Returns False if a pivot magnitude is
    below ``thresh``.
    """
    n = ab.shape[1]
    nrhs = b.shape[1]
    kv = kl + ku
    ipiv = np.empty(n, dtype=np.int64)
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        jp = 0
        diag = _cabs1(ab[kv, j])
        best = diag
        for i in range(1, km + 1):
            v = _cabs1(ab[kv + i, j])
            if v > best:
                best = v
                jp = i
        # threshold pivoting: keep the diagonal unless it is much smaller
        if diag >= _PIVOT_TAU * best:
            jp = 0
        ipiv[j] = j + jp
        if abs(ab[kv + jp, j]) <= thresh:
            return False
        ju = max(ju, min(j + ku + jp, n - 1))
        if jp != 0:
            for c in range(j, ju + 1):
                r1 = kv + j - c
                r2 = kv + j + jp - c
                tmp = ab[r1, c]
                ab[r1, c] = ab[r2, c]
                ab[r2, c] = tmp
        if km > 0:
            piv = ab[kv, j]
            for i in range(1, km + 1):
                ab[kv + i, j] = ab[kv + i, j] / piv
            for c in range(j + 1, ju + 1):
                t = ab[kv + j - c, c]
                if t != 0:
                    for i in range(1, km + 1):
                        ab[kv + j + i - c, c] -= ab[kv + i, j] * t

    # forward substitution with the unit lower factor and row interchanges
    for j in range(n - 1):
        km = min(kl, n - 1 - j)
        p = ipiv[j]
        if p != j:
            for r in range(nrhs):
                tmp = b[p, r]
                b[p, r] = b[j, r]
                b[j, r] = tmp
        for r in range(nrhs):
            bj = _flush(b[j, r])
            b[j, r] = bj
            if bj != 0:
                for i in range(1, km + 1):
                    b[j + i, r] -= ab[kv + i, j] * bj

    # back substitution with the upper factor (bandwidth kl + ku)
    for j in range(n - 1, -1, -1):
        for r in range(nrhs):
            xj = _flush(b[j, r] / ab[kv, j])
            b[j, r] = xj
            if xj != 0:
                for i in range(max(0, j - kv), j):
                    b[i, r] -= ab[kv + i - j, j] * xj
    return True


@numba.njit(cache=True)
def network_output_norms(lp, ld, kl, ku, alpha, cx, s_values, rtol):
    """Norms of ``C (sI - A)^{-1}`` for a second-order network at many ``s``.

    ``lp`` and ``ld`` share the band storage ``data[ku + i - j, j]``; ``cx``
    is the ``n x Q`` transposed position selector. For each ``s`` this
    assembles ``Q(s)^T``, solves for the velocity block ``q`` and forms the
    position block ``D(s)^T q`` on the fly. Returns row-sum (inf) norms,
    column-sum (1) norms and the ``Q x Q`` Gram matrices; a singular point
    gives inf in the first two and NaN in the Gram matrix.
    """
    n = lp.shape[1]
    nq = cx.shape[1]
    k = s_values.size
    kv = kl + ku
    out_inf = np.empty(k)
    out_one = np.empty(k)
    gram = np.zeros((k, nq, nq), dtype=np.complex128)
    for t in range(k):
        s = s_values[t]
        shift = s * s + s * alpha
        # Q(s)^T has lower bandwidth ku and upper bandwidth kl
        ab = np.zeros((2 * ku + kl + 1, n), dtype=np.complex128)
        big = 0.0
        for i in range(n):
            for d in range(-ku, kl + 1):
                j = i + d
                if j < 0 or j >= n:
                    continue
                v = s * ld[ku + d, i] + lp[ku + d, i]
                if d == 0:
                    v += shift
                ab[kv - d, j] = v
                a = _cabs1(v)
                if a > big:
                    big = a
        b = cx.astype(np.complex128)
        if not banded_lu_solve(ab, ku, kl, b, rtol * big):
            out_inf[t] = np.inf
            out_one[t] = np.inf
            gram[t, :, :] = np.nan
            continue
        rows = np.zeros(nq)
        col_max = 0.0
        pi = np.empty(nq, dtype=np.complex128)
        for i in range(n):
            for r in range(nq):
                pi[r] = 0j
            for d in range(-ku, kl + 1):
                j = i + d
                if j < 0 or j >= n:
                    continue
                w = ld[ku + d, i]
                if d == 0:
                    w += s + alpha
                if w != 0:
                    for r in range(nq):
                        pi[r] += w * b[j, r]
            cp = 0.0
            cq = 0.0
            for r in range(nq):
                ap = _cabs1(pi[r])
                aq = _cabs1(b[i, r])
                if ap > 0:
                    ap = abs(pi[r])
                if aq > 0:
                    aq = abs(b[i, r])
                rows[r] += ap + aq
                cp += ap
                cq += aq
            col_max = max(col_max, cp, cq)
            # squares of tiny entries would only add subnormals
            if cp + cq > _GRAM_FLOOR:
                for r in range(nq):
                    for c in range(nq):
                        gram[t, r, c] += (pi[r] * pi[c].conjugate()
                                          + b[i, r] * b[i, c].conjugate())
        out_inf[t] = rows.max()
        out_one[t] = col_max
    return out_inf, out_one, gram
