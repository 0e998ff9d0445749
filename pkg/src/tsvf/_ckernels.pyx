# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Jacobi eigensolver, counter-based RNG, trial samplers.

Mirrors ``_pykernels`` operation for operation; see that module for the
contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, log, cos, fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.1102230246251565e-16
cdef double TWO_PI = 6.283185307179586
cdef int MAX_SWEEPS = 64
cdef double OFF_TOL = 1e-15


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = z ^ (z >> 30)
    z = z * 0xBF58476D1CE4E5B9ULL
    z = z ^ (z >> 27)
    z = z * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _key(uint64_t seed, uint64_t stream) noexcept nogil:
    return _mix64(_mix64(seed) + (stream + 1) * GOLDEN)


cdef inline double _uniform(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(_mix64(key + (counter + 1) * GOLDEN) >> 11) * TWO_M53


def uniform(uint64_t seed, uint64_t stream, uint64_t counter):
    return _uniform(_key(seed, stream), counter)


def jacobi_eigh(a):
    cdef double complex[:, ::1] A = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0]
    V_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] V = V_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double frob = 0.0, off, mag, tau, t, c, s, re, im
    cdef double complex ph, g10, g11, xp, xq
    for p in range(n):
        for q in range(n):
            frob += A[p, q].real * A[p, q].real + A[p, q].imag * A[p, q].imag
    frob = sqrt(frob)
    with nogil:
        for sweep in range(MAX_SWEEPS):
            off = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    off += A[p, q].real * A[p, q].real + A[p, q].imag * A[p, q].imag
            if off == 0.0 or sqrt(2.0 * off) <= OFF_TOL * frob:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    re = A[p, q].real
                    im = A[p, q].imag
                    mag = sqrt(re * re + im * im)
                    if mag == 0.0:
                        continue
                    ph = (re / mag) - (im / mag) * 1j
                    tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    g10 = -s * ph
                    g11 = c * ph
                    for k in range(n):
                        xp = A[k, p]
                        xq = A[k, q]
                        A[k, p] = xp * c + xq * g10
                        A[k, q] = xp * s + xq * g11
                    for k in range(n):
                        xp = A[p, k]
                        xq = A[q, k]
                        A[p, k] = c * xp + g10.conjugate() * xq
                        A[q, k] = s * xp + g11.conjugate() * xq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    A[p, p] = A[p, p].real
                    A[q, q] = A[q, q].real
                    for k in range(n):
                        xp = V[k, p]
                        xq = V[k, q]
                        V[k, p] = xp * c + xq * g10
                        V[k, q] = xp * s + xq * g11
    w = np.empty(n)
    for p in range(n):
        w[p] = A[p, p].real
    return w, V_arr


def simulate_strong(pre, projs, nproj, unitaries, post, bint has_post,
                    uint64_t seed, Py_ssize_t trials, uint64_t stream_offset=0):
    cdef const double complex[::1] pre_v = np.ascontiguousarray(pre, dtype=np.complex128)
    cdef const double complex[:, :, :, ::1] P = np.ascontiguousarray(projs, dtype=np.complex128)
    cdef const int64_t[::1] npr = np.ascontiguousarray(nproj, dtype=np.int64)
    cdef const double complex[:, :, ::1] U = np.ascontiguousarray(unitaries, dtype=np.complex128)
    cdef const double complex[::1] post_v = np.ascontiguousarray(post, dtype=np.complex128)
    cdef Py_ssize_t d = pre_v.shape[0]
    cdef Py_ssize_t n_steps = npr.shape[0]
    cdef Py_ssize_t kmax = P.shape[1] if n_steps > 0 else 1
    out_arr = np.zeros((trials, n_steps), dtype=np.int64)
    succ_arr = np.zeros(trials, dtype=np.uint8)
    cdef int64_t[:, ::1] out = out_arr
    cdef unsigned char[::1] succ = succ_arr
    cdef double complex[::1] v = np.empty(d, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(d, dtype=np.complex128)
    cdef double complex[:, ::1] br = np.empty((kmax, d), dtype=np.complex128)
    cdef double[::1] pk = np.empty(kmax)
    cdef Py_ssize_t tr, s, k, i, j, K, chosen, last_pos
    cdef uint64_t key
    cdef double total, thr, acc, norm, ps
    cdef double complex z
    with nogil:
        for tr in range(trials):
            key = _key(seed, stream_offset + <uint64_t>tr)
            for i in range(d):
                v[i] = pre_v[i]
            for s in range(n_steps):
                K = npr[s]
                total = 0.0
                for k in range(K):
                    acc = 0.0
                    for i in range(d):
                        z = 0.0
                        for j in range(d):
                            z = z + P[s, k, i, j] * v[j]
                        br[k, i] = z
                        acc += z.real * z.real + z.imag * z.imag
                    pk[k] = acc
                    total = total + acc
                thr = _uniform(key, <uint64_t>s) * total
                acc = 0.0
                chosen = -1
                last_pos = -1
                for k in range(K):
                    acc = acc + pk[k]
                    if chosen < 0 and thr < acc:
                        chosen = k
                    if pk[k] > 0.0:
                        last_pos = k
                if chosen < 0:
                    chosen = last_pos
                norm = sqrt(pk[chosen])
                for i in range(d):
                    tmp[i] = br[chosen, i] / norm
                for i in range(d):
                    z = 0.0
                    for j in range(d):
                        z = z + U[s, i, j] * tmp[j]
                    v[i] = z
                out[tr, s] = chosen
            if has_post:
                z = 0.0
                for i in range(d):
                    z = z + post_v[i].conjugate() * v[i]
                ps = z.real * z.real + z.imag * z.imag
                succ[tr] = _uniform(key, <uint64_t>n_steps) < ps
            else:
                succ[tr] = 1
    return out_arr, succ_arr.astype(bool)


def sample_mixture(coefs, centers, double sigma, uint64_t seed, uint64_t stream_start,
                   Py_ssize_t n_streams, Py_ssize_t draws):
    cdef const double complex[::1] cf = np.ascontiguousarray(coefs, dtype=np.complex128)
    cdef const double[::1] a = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t K = cf.shape[0]
    cdef double[::1] w = np.empty(K)
    cdef double[::1] cum = np.empty(K)
    cdef double W = 0.0
    cdef Py_ssize_t i, st, n, comp
    for i in range(K):
        w[i] = sqrt(cf[i].real * cf[i].real + cf[i].imag * cf[i].imag)
        W += w[i]
        cum[i] = W
    out_arr = np.empty((n_streams, draws))
    cdef double[:, ::1] out = out_arr
    cdef double inv4 = 1.0 / (4.0 * sigma * sigma)
    cdef double inv2 = 1.0 / (2.0 * sigma * sigma)
    cdef uint64_t key, ctr
    cdef double u0, u1, u2, u3, x, z, q, re, im, env, dd, e
    with nogil:
        for st in range(n_streams):
            key = _key(seed, stream_start + <uint64_t>st)
            ctr = 0
            n = 0
            while n < draws:
                u0 = _uniform(key, ctr)
                u1 = _uniform(key, ctr + 1)
                u2 = _uniform(key, ctr + 2)
                u3 = _uniform(key, ctr + 3)
                ctr = ctr + 4
                x = u0 * W
                comp = K - 1
                for i in range(K):
                    if x < cum[i]:
                        comp = i
                        break
                z = sqrt(-2.0 * log(1.0 - u1)) * cos(TWO_PI * u2)
                q = a[comp] + sigma * z
                re = 0.0
                im = 0.0
                env = 0.0
                for i in range(K):
                    dd = (q - a[i]) * (q - a[i])
                    e = exp(-dd * inv4)
                    re = re + cf[i].real * e
                    im = im + cf[i].imag * e
                    env = env + w[i] * exp(-dd * inv2)
                if u3 * (W * env) < re * re + im * im:
                    out[st, n] = q
                    n = n + 1
    return out_arr
