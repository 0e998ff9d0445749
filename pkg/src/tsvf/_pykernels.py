"""numpy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is not importable. The
arithmetic follows the Cython code step for step so both backends consume
the same random counters and make the same decisions; they agree to
floating-point roundoff (libm and numpy may differ in the last ulp of
``exp``/``log``/``cos``).
"""

from __future__ import annotations

import numpy as np

from .rng import GOLDEN, TWO_PI, mix64

BACKEND = "python"

_U64 = np.uint64
_GOLDEN = np.array([GOLDEN], dtype=_U64)
_MUL1 = np.array([0xBF58476D1CE4E5B9], dtype=_U64)
_MUL2 = np.array([0x94D049BB133111EB], dtype=_U64)

MAX_SWEEPS = 64
OFF_TOL = 1e-15


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _U64(30))
    z = z * _MUL1
    z = z ^ (z >> _U64(27))
    z = z * _MUL2
    return z ^ (z >> _U64(31))


def stream_keys(seed: int, stream_start: int, n: int) -> np.ndarray:
    streams = np.arange(n, dtype=_U64) + _U64(stream_start + 1)
    base = np.array([mix64(seed)], dtype=_U64)
    return _mix64(base + streams * _GOLDEN)


def uniforms(keys: np.ndarray, counters) -> np.ndarray:
    c = np.asarray(counters, dtype=_U64) + _U64(1)
    bits = _mix64(keys + c * _GOLDEN)
    return (bits >> _U64(11)).astype(np.float64) * 2.0**-53


def jacobi_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi. Returns unsorted eigenvalues and eigenvector columns."""
    A = np.array(a, dtype=np.complex128, copy=True)
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    frob = float(np.sqrt(np.sum(A.real**2 + A.imag**2)))
    for _ in range(MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            row = A[p, p + 1 :]
            off += float(np.sum(row.real**2 + row.imag**2))
        if off == 0.0 or np.sqrt(2.0 * off) <= OFF_TOL * frob:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = np.sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if mag == 0.0:
                    continue
                ph = complex(apq.real / mag, -apq.imag / mag)
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g10 = -s * ph
                g11 = c * ph
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = colp * c + colq * g10
                A[:, q] = colp * s + colq * g11
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp + g10.conjugate() * rowq
                A[q, :] = s * rowp + g11.conjugate() * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = vp * c + vq * g10
                V[:, q] = vp * s + vq * g11
    return A.diagonal().real.copy(), V


def simulate_strong(pre, projs, nproj, unitaries, post, has_post, seed, trials, stream_offset=0):
    """Projective-measurement trials with collapse, then post-selection.

    Trial ``t`` uses stream ``stream_offset + t``; step ``s`` draws counter
    ``s`` and the post-selection draws counter ``len(nproj)``.
    """
    n_steps = len(nproj)
    keys = stream_keys(seed, stream_offset, trials)
    V = np.tile(np.asarray(pre, dtype=np.complex128), (trials, 1))
    outcomes = np.zeros((trials, n_steps), dtype=np.int64)
    rows = np.arange(trials)
    for s in range(n_steps):
        u = uniforms(keys, s)
        K = int(nproj[s])
        branches = [V @ projs[s, k].T for k in range(K)]
        P = np.stack([(w.real**2 + w.imag**2).sum(axis=1) for w in branches])
        total = np.zeros(trials)
        for k in range(K):
            total = total + P[k]
        thr = u * total
        cum = np.zeros(trials)
        chosen = np.full(trials, -1, dtype=np.int64)
        last_pos = np.full(trials, -1, dtype=np.int64)
        for k in range(K):
            cum = cum + P[k]
            hit = (chosen < 0) & (thr < cum)
            chosen[hit] = k
            last_pos[P[k] > 0.0] = k
        chosen = np.where(chosen < 0, last_pos, chosen)
        W = np.stack(branches)[chosen, rows]
        V = W / np.sqrt(P[chosen, rows])[:, None]
        V = V @ unitaries[s].T
        outcomes[:, s] = chosen
    if has_post:
        amp = V @ np.asarray(post, dtype=np.complex128).conj()
        ps = amp.real**2 + amp.imag**2
        success = uniforms(keys, n_steps) < ps
    else:
        success = np.ones(trials, dtype=bool)
    return outcomes, success


def sample_mixture(coefs, centers, sigma, seed, stream_start, n_streams, draws):
    """Rejection sampler for |sum_i c_i phi(q - a_i)|^2.

    Proposal: the Gaussian mixture with weights |c_i|, variance sigma^2. By
    Cauchy-Schwarz the target is bounded by (sum|c|) times the proposal's
    unnormalized density, so the acceptance ratio is at most one. Each
    attempt consumes four consecutive counters of the stream.
    """
    coefs = np.asarray(coefs, dtype=np.complex128)
    centers = np.asarray(centers, dtype=np.float64)
    K = coefs.shape[0]
    w = np.sqrt(coefs.real * coefs.real + coefs.imag * coefs.imag)
    cum = np.zeros(K)
    acc = 0.0
    for i in range(K):
        acc += float(w[i])
        cum[i] = acc
    W = acc
    inv4 = 1.0 / (4.0 * sigma * sigma)
    inv2 = 1.0 / (2.0 * sigma * sigma)

    keys = stream_keys(seed, stream_start, n_streams)
    out = np.empty((n_streams, draws))
    filled = np.zeros(n_streams, dtype=np.int64)
    counters = np.zeros(n_streams, dtype=np.uint64)
    active = np.arange(n_streams) if draws > 0 else np.arange(0)
    while active.size:
        k = keys[active]
        c = counters[active]
        u0 = uniforms(k, c)
        u1 = uniforms(k, c + _U64(1))
        u2 = uniforms(k, c + _U64(2))
        u3 = uniforms(k, c + _U64(3))
        comp = np.minimum(np.searchsorted(cum, u0 * W, side="right"), K - 1)
        z = np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(TWO_PI * u2)
        q = centers[comp] + sigma * z
        re = np.zeros(q.shape[0])
        im = np.zeros(q.shape[0])
        env = np.zeros(q.shape[0])
        for i in range(K):
            d = q - centers[i]
            dd = d * d
            e = np.exp(-dd * inv4)
            re = re + coefs[i].real * e
            im = im + coefs[i].imag * e
            env = env + w[i] * np.exp(-dd * inv2)
        target = re * re + im * im
        accept = u3 * (W * env) < target
        counters[active] += _U64(4)
        hit = active[accept]
        out[hit, filled[hit]] = q[accept]
        filled[hit] += 1
        active = active[filled[active] < draws]
    return out
