# cython: language_level=3
"""Compiled threshold-scan kernel.

Same contract as pykernel.scan_feature: identical traversal order, pruning
logic, counters, and tie rules, with the inner loops in C and the GIL
released for the duration of the scan.
"""

import numpy as np

from libc.math cimport INFINITY, NAN, isnan, sqrt

from ..errors import DenominatorUnderflow

backend_name = "cython"

cdef double DENOM_FLOOR = 1e-14
cdef double PIVOT_REL = 1e-12
cdef int SYM_EVERY = 256


cdef bint _chol_threshold(double[:, ::1] S, double[:, ::1] L, int d) noexcept nogil:
    cdef int i, j, k
    cdef double max_diag = 0.0, thr, s, v
    for j in range(d):
        if S[j, j] > max_diag:
            max_diag = S[j, j]
    if max_diag < 1e-300:
        max_diag = 1e-300
    thr = PIVOT_REL * max_diag
    for i in range(d):
        for j in range(d):
            L[i, j] = 0.0
    for j in range(d):
        s = S[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= thr:
            return False
        L[j, j] = sqrt(s)
        for i in range(j + 1, d):
            v = S[i, j]
            for k in range(j):
                v -= L[i, k] * L[j, k]
            L[i, j] = v / L[j, j]
    return True


cdef void _inv_from_chol(double[:, ::1] L, double[:, ::1] Linv,
                         double[:, ::1] inv, int d) noexcept nogil:
    cdef int i, j, k
    cdef double s
    for i in range(d):
        for j in range(d):
            Linv[i, j] = 0.0
    for j in range(d):
        Linv[j, j] = 1.0 / L[j, j]
        for i in range(j + 1, d):
            s = 0.0
            for k in range(j, i):
                s -= L[i, k] * Linv[k, j]
            Linv[i, j] = s / L[i, i]
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += Linv[k, i] * Linv[k, j]
            inv[i, j] = s


cdef int _acc_add(double[:, ::1] inv, double[:, ::1] S, double[::1] bq,
                  double* c, double[::1] u, int* updates, bint has_inv,
                  double[:, ::1] Xs, int row, double y, int d) noexcept nogil:
    cdef int i, j
    cdef double s, denom, coef, avg
    if has_inv:
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += inv[i, j] * Xs[row, j]
            u[i] = s
        denom = 1.0
        for i in range(d):
            denom += Xs[row, i] * u[i]
        if denom <= DENOM_FLOOR:
            return 1
        coef = 1.0 / denom
        for i in range(d):
            for j in range(d):
                inv[i, j] -= coef * u[i] * u[j]
        updates[0] += 1
        if updates[0] % SYM_EVERY == 0:
            for i in range(d):
                for j in range(i + 1, d):
                    avg = 0.5 * (inv[i, j] + inv[j, i])
                    inv[i, j] = avg
                    inv[j, i] = avg
    else:
        for i in range(d):
            for j in range(d):
                S[i, j] += Xs[row, i] * Xs[row, j]
    for i in range(d):
        bq[i] += Xs[row, i] * y
    c[0] += y * y
    return 0


cdef double _acc_eval(double[:, ::1] inv, double[:, ::1] S, double[::1] bq,
                      double c, double base, double lam, double[::1] w0,
                      double[::1] w, double[:, ::1] L, double[:, ::1] Linv,
                      bint* has_inv, int d, bint want_penalty,
                      double* penalty_out) noexcept nogil:
    cdef int i, j
    cdef double s, dot, loss, p, dv
    if not has_inv[0]:
        if not _chol_threshold(S, L, d):
            penalty_out[0] = NAN
            return NAN
        _inv_from_chol(L, Linv, inv, d)
        has_inv[0] = True
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += inv[i, j] * bq[j]
        w[i] = s
    dot = 0.0
    for i in range(d):
        dot += bq[i] * w[i]
    loss = c + base - dot
    if loss < 0.0:
        loss = 0.0
    penalty_out[0] = 0.0
    if want_penalty:
        p = 0.0
        for i in range(d):
            dv = w[i] - w0[i]
            p += dv * dv
        penalty_out[0] = lam * p
    return loss


cdef inline double _bound(int strategy, double l_k, double r_k, double pl,
                          double pr, int N, int k, int per_sample) noexcept nogil:
    cdef double dl, dr, extra
    if strategy == 1:
        return l_k + r_k
    dl = l_k - pl
    dr = r_k - pr
    if per_sample:
        dl /= k
        dr /= N - k
    if strategy == 2:
        extra = dl if dl < dr else dr
    else:
        extra = dl if dl > dr else dr
    return l_k + r_k + (N - 2 * k) * extra


def scan_feature(double[:, ::1] Xs, double[::1] Ys, unsigned char[::1] splittable,
                 double lam, double[::1] w0, int min_leaf, int strategy,
                 int per_sample_norm, double seed_threshold,
                 double[::1] out_l, double[::1] out_r):
    """Compiled twin of pykernel.scan_feature; see that docstring."""
    cdef int N = Xs.shape[0]
    cdef int d = Xs.shape[1]
    cdef int lo = min_leaf
    cdef int hi = N - min_leaf
    cdef bint want_penalty = strategy >= 2
    cdef bint check_pruning = strategy != 0
    cdef int prune_k = 0
    cdef double last_pl = 0.0, last_pr = 0.0
    cdef int best_m = 0
    cdef double best_total = INFINITY
    cdef int scanned = 0
    cdef int pruned = 0
    cdef int half = (N + 1) // 2
    cdef int k, p, which, row
    cdef int p_low
    cdef double loss, pen, l_k, r_k, bound, l_val, r_val, total
    cdef int err = 0
    cdef bint skip

    scratch = np.zeros((8, d, d), dtype=np.float64)
    cdef double[:, ::1] inv_f = scratch[0]
    cdef double[:, ::1] inv_b = scratch[1]
    cdef double[:, ::1] S_f = scratch[2]
    cdef double[:, ::1] S_b = scratch[3]
    cdef double[:, ::1] L_f = scratch[4]
    cdef double[:, ::1] L_b = scratch[5]
    cdef double[:, ::1] Linv_f = scratch[6]
    cdef double[:, ::1] Linv_b = scratch[7]
    vec_scratch = np.zeros((4, d), dtype=np.float64)
    cdef double[::1] bq_f = vec_scratch[0]
    cdef double[::1] bq_b = vec_scratch[1]
    cdef double[::1] u = vec_scratch[2]
    cdef double[::1] wv = vec_scratch[3]
    cdef double c_f = 0.0, c_b = 0.0
    cdef double base = 0.0
    cdef int updates_f = 0, updates_b = 0
    cdef bint has_inv_f, has_inv_b
    cdef int i

    for i in range(d):
        base += w0[i] * w0[i]
        bq_f[i] = lam * w0[i]
        bq_b[i] = lam * w0[i]
    base *= lam
    if lam > 0.0:
        for i in range(d):
            inv_f[i, i] = 1.0 / lam
            inv_b[i, i] = 1.0 / lam
        has_inv_f = True
        has_inv_b = True
    else:
        has_inv_f = False
        has_inv_b = False

    with nogil:
        for k in range(1, N):
            err = _acc_add(inv_f, S_f, bq_f, &c_f, u, &updates_f, has_inv_f,
                           Xs, k - 1, Ys[k - 1], d)
            if err:
                break
            err = _acc_add(inv_b, S_b, bq_b, &c_b, u, &updates_b, has_inv_b,
                           Xs, N - k, Ys[N - k], d)
            if err:
                break
            if lo <= k <= hi:
                skip = prune_k > 0 and prune_k < k <= N - prune_k
                if not skip:
                    loss = _acc_eval(inv_f, S_f, bq_f, c_f, base, lam, w0, wv,
                                     L_f, Linv_f, &has_inv_f, d, want_penalty,
                                     &pen)
                    out_l[k] = loss
                    last_pl = pen
                    loss = _acc_eval(inv_b, S_b, bq_b, c_b, base, lam, w0, wv,
                                     L_b, Linv_b, &has_inv_b, d, want_penalty,
                                     &pen)
                    out_r[k] = loss
                    last_pr = pen
            if check_pruning and prune_k == 0 and 2 * k <= N:
                l_k = out_l[k]
                r_k = out_r[k]
                if not (isnan(l_k) or isnan(r_k)):
                    bound = _bound(strategy, l_k, r_k, last_pl, last_pr, N, k,
                                   per_sample_norm)
                    if bound > seed_threshold:
                        prune_k = k
            if k >= half:
                p_low = N - k
                for which in range(2):
                    if which == 0:
                        p = p_low
                    else:
                        if p_low == k:
                            break
                        p = k
                    if not splittable[p]:
                        continue
                    if prune_k > 0 and prune_k <= p <= N - prune_k:
                        pruned += 1
                        continue
                    l_val = out_l[p]
                    r_val = out_r[N - p]
                    if isnan(l_val) or isnan(r_val):
                        continue
                    total = l_val + r_val
                    scanned += 1
                    if total < best_total or (total == best_total and p < best_m):
                        best_total = total
                        best_m = p

    if err:
        raise DenominatorUnderflow("scan update denominator underflow")
    return best_m, best_total, scanned, pruned
