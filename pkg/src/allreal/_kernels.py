"""Compiled kernels: rank test, Hessenberg reduction and double-shift QR sweeps.

Only the diagonal blocks of the quasi-triangular form are needed, so the QR
sweeps update the active window alone. Verdict codes match
:class:`allreal.spectra.SpectrumClass` ordinals.
"""

import numpy as np
from numba import njit

ALL_REAL = 0
COMPLEX_PAIR = 1
INDETERMINATE = 2

_ULP = 2.220446049250313e-16
_SAFMIN = 2.2250738585072014e-308


@njit(cache=True, nogil=True)
def hessenberg(a):
    """Householder reduction of ``a`` (modified in place) to upper Hessenberg form."""
    n = a.shape[0]
    v = np.empty(n)
    for j in range(n - 2):
        norm = 0.0
        for i in range(j + 1, n):
            norm += a[i, j] * a[i, j]
        norm = np.sqrt(norm)
        if norm == 0.0:
            continue
        alpha = -norm if a[j + 1, j] >= 0.0 else norm
        vv = 0.0
        for i in range(j + 1, n):
            v[i] = a[i, j]
        v[j + 1] -= alpha
        for i in range(j + 1, n):
            vv += v[i] * v[i]
        if vv == 0.0:
            continue
        # left: rows j+1.. of a
        for c in range(n):
            s = 0.0
            for i in range(j + 1, n):
                s += v[i] * a[i, c]
            s = 2.0 * s / vv
            for i in range(j + 1, n):
                a[i, c] -= s * v[i]
        # right: columns j+1.. of a
        for r in range(n):
            s = 0.0
            for i in range(j + 1, n):
                s += a[r, i] * v[i]
            s = 2.0 * s / vv
            for i in range(j + 1, n):
                a[r, i] -= s * v[i]
        for i in range(j + 2, n):
            a[i, j] = 0.0
    return a


@njit(cache=True, nogil=True)
def _negligible(a, l):
    # deflation test on subdiagonal a[l, l-1] (1-based), after LAPACK dlahqr
    n = a.shape[0] - 1
    sub = abs(a[l, l - 1])
    smlnum = _SAFMIN * (n / _ULP)
    if sub <= smlnum:
        return True
    tst = abs(a[l - 1, l - 1]) + abs(a[l, l])
    if tst == 0.0:
        if l - 2 >= 1:
            tst += abs(a[l - 1, l - 2])
        if l + 1 <= n:
            tst += abs(a[l + 1, l])
    if sub > _ULP * tst:
        return False
    ab = max(sub, abs(a[l - 1, l]))
    ba = min(sub, abs(a[l - 1, l]))
    diff = abs(a[l - 1, l - 1] - a[l, l])
    aa = max(abs(a[l, l]), diff)
    bb = min(abs(a[l, l]), diff)
    s = aa + ab
    return ba * (ab / s) <= max(smlnum, _ULP * (bb * (aa / s)))


@njit(cache=True, nogil=True)
def _block_verdict(p, q, r, s, tau):
    # block [[p, q], [r, s]]: discriminant (p - s)^2 + 4qr against tau * scale^2
    d = (p - s) * (p - s) + 4.0 * q * r
    scale = max(max(abs(p), abs(q)), max(abs(r), abs(s)))
    band = tau * scale * scale
    if d >= band:
        return ALL_REAL
    if d < -band:
        return COMPLEX_PAIR
    return INDETERMINATE


@njit(cache=True, nogil=True)
def classify_one(m, tau, max_sweeps_per_dim):
    """Verdict for one real matrix via real-Schur style 2x2 diagonal blocks."""
    k = m.shape[0]
    if k == 1:
        return ALL_REAL
    h = hessenberg(m.copy())
    # 1-based working copy
    a = np.zeros((k + 1, k + 1))
    for i in range(k):
        for j in range(k):
            a[i + 1, j + 1] = h[i, j]
    anorm = 0.0
    for i in range(1, k + 1):
        for j in range(max(i - 1, 1), k + 1):
            anorm += abs(a[i, j])
    if anorm == 0.0:
        return ALL_REAL
    verdict = ALL_REAL
    budget = max_sweeps_per_dim * k
    total = 0
    nn = k
    t = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = nn
            while l >= 2:
                if _negligible(a, l):
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                v = _block_verdict(y + t, a[nn - 1, nn], a[nn, nn - 1], x + t, tau)
                if v == COMPLEX_PAIR:
                    return COMPLEX_PAIR
                if v == INDETERMINATE:
                    verdict = INDETERMINATE
                nn -= 2
                break
            if total >= budget:
                return INDETERMINATE
            if its == 10 or its == 20:
                # exceptional shift
                t += x
                for i in range(1, nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = 0.75 * s
                y = x
                w = -0.4375 * s * s
            its += 1
            total += 1
            m_ = nn - 2
            p = q = r = 0.0
            while m_ >= l:
                z = a[m_, m_]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m_ + 1, m_] + a[m_, m_ + 1]
                q = a[m_ + 1, m_ + 1] - z - r - s
                r = a[m_ + 2, m_ + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m_ == l:
                    break
                u = abs(a[m_, m_ - 1]) * (abs(q) + abs(r))
                vv = abs(p) * (abs(a[m_ - 1, m_ - 1]) + abs(z) + abs(a[m_ + 1, m_ + 1]))
                if u + vv == vv:
                    break
                m_ -= 1
            for i in range(m_ + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m_ + 2:
                    a[i, i - 3] = 0.0
            for kk in range(m_, nn):
                if kk != m_:
                    p = a[kk, kk - 1]
                    q = a[kk + 1, kk - 1]
                    r = 0.0
                    if kk != nn - 1:
                        r = a[kk + 2, kk - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = np.sqrt(p * p + q * q + r * r)
                if p < 0.0:
                    s = -s
                if s != 0.0:
                    if kk == m_:
                        if l != m_:
                            a[kk, kk - 1] = -a[kk, kk - 1]
                    else:
                        a[kk, kk - 1] = -s * x
                    p += s
                    x = p / s
                    y = q / s
                    z = r / s
                    q /= p
                    r /= p
                    for j in range(kk, nn + 1):
                        p = a[kk, j] + q * a[kk + 1, j]
                        if kk != nn - 1:
                            p += r * a[kk + 2, j]
                            a[kk + 2, j] -= p * z
                        a[kk + 1, j] -= p * y
                        a[kk, j] -= p * x
                    mmin = nn if nn < kk + 3 else kk + 3
                    for i in range(l, mmin + 1):
                        p = x * a[i, kk] + y * a[i, kk + 1]
                        if kk != nn - 1:
                            p += z * a[i, kk + 2]
                            a[i, kk + 2] -= p * r
                        a[i, kk + 1] -= p * q
                        a[i, kk] -= p
    return verdict


@njit(cache=True, nogil=True)
def rank_le_one(m, tol):
    """Every 2x2 minor of ``m / max|entry|`` within ``tol``."""
    k = m.shape[0]
    scale = 0.0
    for i in range(k):
        for j in range(k):
            scale = max(scale, abs(m[i, j]))
    if scale == 0.0:
        return True
    inv = 1.0 / scale
    for i in range(k):
        for j in range(i + 1, k):
            for p in range(k):
                for q in range(p + 1, k):
                    minor = (m[i, p] * inv) * (m[j, q] * inv) - (m[i, q] * inv) * (m[j, p] * inv)
                    if abs(minor) > tol:
                        return False
    return True


@njit(cache=True, nogil=True)
def rank_le_one_batch(mats, tol):
    out = np.empty(mats.shape[0], dtype=np.bool_)
    for b in range(mats.shape[0]):
        out[b] = rank_le_one(mats[b], tol)
    return out


@njit(cache=True, nogil=True)
def classify_batch(mats, tau, rank_tol, max_sweeps_per_dim):
    """Verdicts for a batch; numerically rank-<=1 matrices are real (eigenvalues 0 and the trace)."""
    out = np.empty(mats.shape[0], dtype=np.int8)
    for b in range(mats.shape[0]):
        if rank_le_one(mats[b], rank_tol):
            out[b] = ALL_REAL
        else:
            out[b] = classify_one(mats[b], tau, max_sweeps_per_dim)
    return out
