"""Monte Carlo of strong and weak measurements on pre/post-selected systems.

Strong measurements are ideal projective measurements with collapse. Weak
measurements use a von Neumann pointer with Gaussian initial wavefunction

    phi(q) = (2 pi sigma^2)^(-1/4) exp(-q^2 / (4 sigma^2))

coupled impulsively to the observable. After post-selection the pointer is
left in the (unnormalized) superposition psi(q) = sum_i c_i phi(q - a_i)
with c_i = <post|P_i|pre>. Products of two shifted pointer wavefunctions are
Gaussians of variance sigma^2 centred at the midpoint, damped by
exp(-(a_i - a_j)^2 / (8 sigma^2)); the moments below follow from that.

Randomness: trial ``t`` of an experiment draws from stream ``t`` of the
master seed (see :mod:`tsvf.rng`), so results do not depend on execution
order or on how trials are split between workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from ._backend import kernels
from .errors import ImpossiblePostSelection, UndefinedWeakValue
from .hilbert import Operator, StateVector, apply
from .rng import RngStream, TWO_PI
from .twostate import (
    IMPOSSIBLE_TOL,
    ObservableLike,
    OutcomeDistribution,
    TwoStateVector,
    _check_schedule,
    _label,
    as_observable,
    selection_amplitudes,
)

DEFAULT_SIGMA = 10.0


@dataclass(frozen=True)
class GaussianPointer:
    sigma: float = DEFAULT_SIGMA
    mean: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"pointer sigma must be positive and finite, got {self.sigma}")

    def wavefunction(self, q):
        s2 = self.sigma * self.sigma
        return (2.0 * math.pi * s2) ** -0.25 * np.exp(-((np.asarray(q) - self.mean) ** 2) / (4.0 * s2))


@dataclass(frozen=True)
class PointerMixture:
    """psi(q) = sum_i coefficients[i] * phi(q - centers[i])."""

    coefficients: np.ndarray
    centers: np.ndarray
    sigma: float

    def amplitude(self, q):
        q = np.asarray(q, dtype=float)
        s2 = self.sigma * self.sigma
        pref = (2.0 * math.pi * s2) ** -0.25
        out = np.zeros(q.shape, dtype=complex)
        for c, a in zip(self.coefficients, self.centers):
            out = out + c * pref * np.exp(-((q - a) ** 2) / (4.0 * s2))
        return out

    def density(self, q):
        """Unnormalized |psi(q)|^2; integrates to :meth:`norm2`."""
        amp = self.amplitude(q)
        return amp.real**2 + amp.imag**2

    def _pair_terms(self):
        c = self.coefficients
        a = self.centers
        w = (np.conj(c)[:, None] * c[None, :]).real
        damp = np.exp(-((a[:, None] - a[None, :]) ** 2) / (8.0 * self.sigma**2))
        mid = 0.5 * (a[:, None] + a[None, :])
        return w * damp, mid

    def norm2(self) -> float:
        wd, _ = self._pair_terms()
        return float(wd.sum())


@dataclass(frozen=True)
class PointerMoments:
    mean: float
    postselect_probability: float
    variance: float


@dataclass(frozen=True)
class PointerStatistics:
    sample_mean: float
    sample_variance: float
    n_trials: int
    analytic_mean: float
    analytic_postselection_probability: float
    analytic_variance: float = float("nan")
    n_particles: int = 1
    bare_postselection_probability: float = float("nan")

    @property
    def standard_error(self) -> float:
        if self.n_trials < 2:
            return float("nan")
        return math.sqrt(self.sample_variance / self.n_trials)


@dataclass(frozen=True)
class TrialRecord:
    postselected: bool
    outcomes: tuple
    pointer_readings: tuple = ()


@dataclass
class ExperimentResult:
    trials: int
    n_postselected: int
    step_names: list
    step_labels: list
    outcome_index: np.ndarray = field(repr=False)
    postselected: np.ndarray = field(repr=False)

    @property
    def no_data(self) -> bool:
        return self.n_postselected == 0

    @property
    def success_rate(self) -> float:
        return self.n_postselected / self.trials

    @property
    def success_rate_se(self) -> float:
        p = self.success_rate
        return math.sqrt(p * (1.0 - p) / self.trials)

    def counts(self) -> dict:
        """Outcome tuple -> count over post-selected trials."""
        sel = self.outcome_index[self.postselected]
        if sel.shape[1] == 0:
            return {(): int(sel.shape[0])} if sel.shape[0] else {}
        uniq, cnt = np.unique(sel, axis=0, return_counts=True)
        out = {}
        for row, n in zip(uniq, cnt):
            out[tuple(self.step_labels[s][k] for s, k in enumerate(row))] = int(n)
        return out

    def frequencies(self) -> Optional[OutcomeDistribution]:
        if self.no_data:
            return None
        n = self.n_postselected
        items = sorted((lab, c / n) for lab, c in self.counts().items())
        return OutcomeDistribution(tuple(items))

    def records(self) -> Iterator[TrialRecord]:
        for t in range(self.trials):
            outs = tuple(
                (self.step_names[s], self.step_labels[s][k]) for s, k in enumerate(self.outcome_index[t])
            )
            yield TrialRecord(bool(self.postselected[t]), outs)


def strong_measure(state: StateVector, obs: ObservableLike, rng: RngStream) -> tuple[float, StateVector]:
    """Ideal projective measurement: Born-rule outcome and collapsed state.

    Consumes one uniform from ``rng``; the selection rule matches the batch
    kernel, so a trial replayed through this function gives the same outcome.
    """
    o = as_observable(obs)
    branches = [(lam, apply(proj, state)) for lam, proj in o.spectrum]
    probs = [float(np.sum(b.amps.real**2 + b.amps.imag**2)) for _, b in branches]
    total = 0.0
    for p in probs:
        total = total + p
    thr = rng.uniform() * total
    acc = 0.0
    chosen = None
    for k, p in enumerate(probs):
        acc = acc + p
        if thr < acc:
            chosen = k
            break
    if chosen is None:
        chosen = max(k for k, p in enumerate(probs) if p > 0.0)
    lam, vec = branches[chosen]
    return _label(lam), StateVector(vec.amps / math.sqrt(probs[chosen]))


def _pack_schedule(dim: int, steps):
    n_steps = len(steps)
    kmax = max((len(o.spectrum) for o, _ in steps), default=1)
    projs = np.zeros((n_steps, kmax, dim, dim), dtype=np.complex128)
    nproj = np.zeros(n_steps, dtype=np.int64)
    unitaries = np.zeros((n_steps, dim, dim), dtype=np.complex128)
    for s, (o, u) in enumerate(steps):
        nproj[s] = len(o.spectrum)
        for k, proj in enumerate(o.spectrum.projectors):
            projs[s, k] = proj.matrix
        unitaries[s] = np.eye(dim) if u is None else u.matrix
    return projs, nproj, unitaries


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, total))
    size = -(-total // workers)
    return [(start, min(size, total - start)) for start in range(0, total, size)]


def run_pre_post_experiment(
    pre: StateVector,
    post: Optional[StateVector],
    schedule: Sequence,
    trials: int,
    seed: int,
    workers: int = 1,
) -> ExperimentResult:
    """Simulate prepare -> measure (and evolve) per schedule -> post-select.

    ``post=None`` means every trial is kept. When no trial survives the
    post-selection the result has ``no_data`` set instead of raising.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if post is not None and post.dim != pre.dim:
        raise ValueError(f"pre and post dimensions differ: {pre.dim} vs {post.dim}")
    steps = _check_schedule(pre.dim, schedule)
    projs, nproj, unitaries = _pack_schedule(pre.dim, steps)
    post_amps = post.amps if post is not None else np.zeros(pre.dim, dtype=np.complex128)

    def run(chunk):
        start, n = chunk
        return kernels.simulate_strong(
            pre.amps, projs, nproj, unitaries, post_amps, post is not None, seed, n, start
        )

    chunks = _chunks(trials, workers)
    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    outcome_index = np.concatenate([p[0] for p in parts])
    success = np.concatenate([p[1] for p in parts]).astype(bool)
    return ExperimentResult(
        trials=trials,
        n_postselected=int(success.sum()),
        step_names=[o.name for o, _ in steps],
        step_labels=[[_label(lam) for lam in o.spectrum.eigenvalues] for o, _ in steps],
        outcome_index=outcome_index,
        postselected=success,
    )


def weak_pointer_amplitudes(
    tsv: TwoStateVector, obs: ObservableLike, pointer: GaussianPointer
) -> PointerMixture:
    if tsv.post is None:
        raise UndefinedWeakValue("weak pointer amplitudes need a post-selected state")
    amps = selection_amplitudes(tsv, obs)
    coefs = np.array([c for _, c in amps], dtype=np.complex128)
    centers = np.array([pointer.mean + lam for lam, _ in amps], dtype=np.float64)
    coefs.setflags(write=False)
    centers.setflags(write=False)
    return PointerMixture(coefs, centers, pointer.sigma)


def pointer_moments(mixture: PointerMixture) -> PointerMoments:
    """Closed-form moments of q under |psi(q)|^2 / ||psi||^2."""
    wd, mid = mixture._pair_terms()
    norm = float(wd.sum())
    if norm < IMPOSSIBLE_TOL:
        raise ImpossiblePostSelection("post-selection impossible at this coupling")
    mean = float((wd * mid).sum()) / norm
    second = float((wd * (mid**2 + mixture.sigma**2)).sum()) / norm
    return PointerMoments(mean, norm, second - mean * mean)


def pointer_conditional_mean(mixture: PointerMixture) -> tuple[float, float]:
    """(conditional pointer mean, post-selection probability)."""
    m = pointer_moments(mixture)
    return m.mean, m.postselect_probability


def _check_samplable(mixture: PointerMixture) -> None:
    if mixture.norm2() < IMPOSSIBLE_TOL:
        raise ImpossiblePostSelection("post-selection impossible at this coupling")


def sample_pointer(mixture: PointerMixture, rng: RngStream) -> float:
    """One draw from |psi(q)|^2 / ||psi||^2 by rejection sampling.

    Same algorithm and counter use as the batch kernel (four uniforms per
    attempt).
    """
    _check_samplable(mixture)
    coefs = mixture.coefficients
    centers = mixture.centers
    sigma = mixture.sigma
    w = [math.sqrt(c.real * c.real + c.imag * c.imag) for c in coefs]
    cum = []
    W = 0.0
    for x in w:
        W += x
        cum.append(W)
    inv4 = 1.0 / (4.0 * sigma * sigma)
    inv2 = 1.0 / (2.0 * sigma * sigma)
    while True:
        u0, u1, u2, u3 = rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()
        x = u0 * W
        comp = next((i for i, c in enumerate(cum) if x < c), len(cum) - 1)
        z = math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(TWO_PI * u2)
        q = float(centers[comp]) + sigma * z
        re = im = env = 0.0
        for i in range(len(w)):
            dd = (q - centers[i]) * (q - centers[i])
            e = math.exp(-dd * inv4)
            re = re + coefs[i].real * e
            im = im + coefs[i].imag * e
            env = env + w[i] * math.exp(-dd * inv2)
        if u3 * (W * env) < re * re + im * im:
            return q


def sample_pointer_batch(
    mixture: PointerMixture, n_streams: int, seed: int, draws: int = 1, stream_start: int = 0, workers: int = 1
) -> np.ndarray:
    """``(n_streams, draws)`` pointer readings; row ``t`` comes from stream ``stream_start + t``."""
    _check_samplable(mixture)

    def run(chunk):
        start, n = chunk
        return kernels.sample_mixture(
            mixture.coefficients, mixture.centers, mixture.sigma, seed, stream_start + start, n, draws
        )

    chunks = _chunks(n_streams, workers)
    if len(chunks) == 1:
        return run(chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return np.concatenate(list(pool.map(run, chunks)))


def _mean_var(x: np.ndarray) -> tuple[float, float]:
    n = x.shape[0]
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / (n - 1) if n > 1 else float("nan")
    return mean, var


def pointer_statistics(
    mixture: PointerMixture, trials: int, seed: int, n_particles: int = 1, overlap2: float = float("nan"), workers: int = 1
) -> PointerStatistics:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    moments = pointer_moments(mixture)
    readings = sample_pointer_batch(mixture, trials, seed, draws=n_particles, workers=workers).sum(axis=1)
    mean, var = _mean_var(readings)
    return PointerStatistics(
        sample_mean=mean,
        sample_variance=var,
        n_trials=trials,
        analytic_mean=n_particles * moments.mean,
        analytic_postselection_probability=moments.postselect_probability**n_particles,
        analytic_variance=n_particles * moments.variance,
        n_particles=n_particles,
        bare_postselection_probability=overlap2**n_particles,
    )


def ensemble_pressure(
    tsv_single: TwoStateVector,
    box: ObservableLike,
    N: int,
    pointer: GaussianPointer,
    trials: int,
    seed: int,
    workers: int = 1,
) -> PointerStatistics:
    """Summed pointer reading of N identically pre/post-selected particles.

    Conditional on every post-selection succeeding the particles' pointers
    are independent, so each trial draws N readings from the single-particle
    conditional distribution instead of rejecting on a ~|<post|pre>|^(2N)
    success rate. The raw rate is reported analytically.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    mixture = weak_pointer_amplitudes(tsv_single, box, pointer)
    overlap2 = abs(tsv_single.overlap()) ** 2
    return pointer_statistics(mixture, trials, seed, n_particles=N, overlap2=overlap2, workers=workers)
