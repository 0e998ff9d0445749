import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsvf.errors import ImpossiblePostSelection, UndefinedWeakValue
from tsvf.hilbert import Operator, StateVector, random_hermitian, random_state
from tsvf.measure import (
    GaussianPointer,
    ensemble_pressure,
    pointer_conditional_mean,
    pointer_moments,
    pointer_statistics,
    run_pre_post_experiment,
    sample_pointer,
    sample_pointer_batch,
    strong_measure,
    weak_pointer_amplitudes,
)
from tsvf.rng import RngStream
from tsvf.twostate import TwoStateVector, abl_probabilities, weak_value

_trapz = getattr(np, "trapezoid", None) or np.trapz


def quadrature_moments(post, op, pre, sigma, n=40001):
    """Pointer mean and post-selection weight by grid integration over q.

    psi(q) is assembled from numpy's eigenbasis of op, independently of the library.
    """
    w, v = np.linalg.eigh(np.asarray(op))
    lo, hi = w.min() - 12 * sigma, w.max() + 12 * sigma
    q = np.linspace(lo, hi, n)
    psi = np.zeros_like(q, dtype=complex)
    for lam, col in zip(w, v.T):
        c = np.vdot(post, col) * np.vdot(col, pre)
        psi += c * (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((q - lam) ** 2) / (4 * sigma**2))
    dens = np.abs(psi) ** 2
    norm = _trapz(dens, q)
    first = _trapz(q * dens, q)
    return first / norm, norm


# ------------------------------------------------------------ strong


def test_strong_measure_box_a_born(box):
    hits = 0
    rng = RngStream(3)
    for _ in range(3000):
        lab, _ = strong_measure(box.pre, box.observable("P_A"), rng)
        hits += lab == 1.0
    assert abs(hits / 3000 - 1 / 3) < 4 * math.sqrt(2 / 9 / 3000)


def test_strong_measure_collapses(box):
    lab, after = strong_measure(box.pre, box.observable("X"), RngStream(1))
    assert after.is_normalized()
    assert abs(after.amps[int(lab)]) == pytest.approx(1.0)


def test_strong_measure_eigenstate_is_deterministic():
    z = Operator.diagonal([1, -1])
    for s in range(20):
        lab, after = strong_measure(StateVector([0, 1]), z, RngStream(s))
        assert lab == -1.0
        assert np.array_equal(after.amps, [0, 1])


def test_strong_measure_consumes_one_uniform(box):
    rng = RngStream(4)
    strong_measure(box.pre, box.observable("X"), rng)
    assert rng.counter == 1


def _se(p, n):
    return math.sqrt(p * (1 - p) / n)


def test_experiment_box_a_postselected(box):
    res = run_pre_post_experiment(box.pre, box.post, box.schedule_entries(), 100_000, seed=1)
    assert abs(res.success_rate - 1 / 9) <= 3 * _se(1 / 9, res.trials)
    freq = res.frequencies()
    assert freq[(1.0,)] == 1.0


def test_experiment_empty_schedule(box):
    res = run_pre_post_experiment(box.pre, box.post, [], 100_000, seed=2)
    assert abs(res.success_rate - 1 / 9) <= 4 * _se(1 / 9, res.trials)


def test_experiment_box_c_one_fifth(box):
    res = run_pre_post_experiment(box.pre, box.post, box.schedule_entries([("P_C", "identity")]), 200_000, 3)
    f = res.frequencies()
    n = res.n_postselected
    assert abs(f[(1.0,)] - 0.2) <= 4 * _se(0.2, n)


def test_experiment_singlet_x_pairs(spins):
    entries = spins.schedule_entries([("sigma_1x", "identity"), ("sigma_2x", "identity")])
    res = run_pre_post_experiment(spins.pre, None, entries, 5000, seed=4)
    assert res.success_rate == 1.0
    assert res.frequencies().probability_where(lambda lab: lab[0] + lab[1] == 0) == 1.0


def test_experiment_no_data():
    a, b = StateVector.basis(2, 0), StateVector.basis(2, 1)
    res = run_pre_post_experiment(a, b, [(Operator.diagonal([1, -1]), None)], 100, seed=0)
    assert res.no_data
    assert res.frequencies() is None
    assert res.success_rate == 0.0


def test_experiment_workers_do_not_change_results(box):
    entries = box.schedule_entries([("X", "identity")])
    a = run_pre_post_experiment(box.pre, box.post, entries, 10_001, seed=9, workers=1)
    b = run_pre_post_experiment(box.pre, box.post, entries, 10_001, seed=9, workers=4)
    assert np.array_equal(a.outcome_index, b.outcome_index)
    assert np.array_equal(a.postselected, b.postselected)


def test_experiment_seed_determinism(box):
    a = run_pre_post_experiment(box.pre, box.post, box.schedule_entries(), 2000, seed=7)
    b = run_pre_post_experiment(box.pre, box.post, box.schedule_entries(), 2000, seed=7)
    c = run_pre_post_experiment(box.pre, box.post, box.schedule_entries(), 2000, seed=8)
    assert a.counts() == b.counts()
    assert not np.array_equal(a.postselected, c.postselected)


def test_experiment_records(box):
    res = run_pre_post_experiment(box.pre, box.post, box.schedule_entries(), 50, seed=1)
    recs = list(res.records())
    assert len(recs) == 50
    assert sum(r.postselected for r in recs) == res.n_postselected


def test_experiment_rejects_bad_trials(box):
    with pytest.raises(ValueError):
        run_pre_post_experiment(box.pre, box.post, [], 0, seed=1)


# ------------------------------------------------------------- weak


def test_pointer_amplitudes_box_c(box, box_tsv):
    mix = weak_pointer_amplitudes(box_tsv, box.observables["P_C"], GaussianPointer(10.0))
    np.testing.assert_allclose(mix.coefficients, [2 / 3, -1 / 3], atol=1e-12)
    np.testing.assert_allclose(mix.centers, [0.0, 1.0])


def test_pointer_amplitude_function_matches_formula(box, box_tsv):
    mix = weak_pointer_amplitudes(box_tsv, box.observables["P_C"], GaussianPointer(2.0))
    q = np.linspace(-5, 5, 11)
    phi = lambda x: (2 * np.pi * 4) ** -0.25 * np.exp(-(x**2) / 16)
    np.testing.assert_allclose(mix.amplitude(q), 2 / 3 * phi(q) - 1 / 3 * phi(q - 1), atol=1e-15)


def test_pointer_needs_post(box):
    with pytest.raises(UndefinedWeakValue):
        weak_pointer_amplitudes(TwoStateVector(box.pre), box.observables["P_C"], GaussianPointer())


@pytest.mark.parametrize(
    "name, sigma, target, rel",
    [("P_A", 10.0, 1.0, 1e-9), ("P_B", 10.0, 1.0, 1e-9), ("P_C", 10.0, -1.0, 0.02), ("P_C", 0.01, 0.2, 0.02)],
)
def test_pointer_mean_targets(box, box_tsv, name, sigma, target, rel):
    op = box.observables[name]
    mix = weak_pointer_amplitudes(box_tsv, op, GaussianPointer(sigma))
    mean, p = pointer_conditional_mean(mix)
    assert mean == pytest.approx(target, rel=rel)
    q_mean, q_norm = quadrature_moments(box.post.amps, op.matrix, box.pre.amps, sigma)
    assert mean == pytest.approx(q_mean, abs=1e-7)
    assert p == pytest.approx(q_norm, abs=1e-7)


def test_pointer_frozen_values(box, box_tsv):
    # frozen from the quadrature oracle above
    mix = weak_pointer_amplitudes(box_tsv, box.observables["P_C"], GaussianPointer(10.0))
    mean, p = pointer_conditional_mean(mix)
    assert mean == pytest.approx(-0.99254, abs=5e-6)
    assert p == pytest.approx(0.111666, abs=5e-7)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 4), sigma=st.sampled_from([0.3, 1.0, 4.0]))
def test_pointer_moments_match_quadrature(seed, dim, sigma):
    rng = np.random.default_rng(seed)
    pre, post = random_state(dim, rng), random_state(dim, rng)
    h = random_hermitian(dim, rng)
    mix = weak_pointer_amplitudes(TwoStateVector(pre, post), h, GaussianPointer(sigma))
    m = pointer_moments(mix)
    q_mean, q_norm = quadrature_moments(post.amps, h.matrix, pre.amps, sigma)
    assert m.postselect_probability == pytest.approx(q_norm, abs=1e-8)
    if q_norm > 1e-6:
        assert m.mean == pytest.approx(q_mean, abs=1e-5 * max(1.0, abs(q_mean)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 5))
def test_weak_limit_tends_to_real_weak_value(seed, dim):
    rng = np.random.default_rng(seed)
    pre, post = random_state(dim, rng), random_state(dim, rng)
    tsv = TwoStateVector(pre, post)
    if abs(tsv.overlap()) < 0.05:
        return
    h = random_hermitian(dim, rng)
    wv = weak_value(tsv, h)
    mean, _ = pointer_conditional_mean(weak_pointer_amplitudes(tsv, h, GaussianPointer(2000.0)))
    assert mean == pytest.approx(wv.real, abs=1e-3 * max(1.0, abs(wv)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 5))
def test_strong_limit_tends_to_abl_mean(seed, dim):
    rng = np.random.default_rng(seed)
    pre, post = random_state(dim, rng), random_state(dim, rng)
    tsv = TwoStateVector(pre, post)
    h = random_hermitian(dim, rng)
    abl = abl_probabilities(tsv, h)
    if min(np.diff(abl.labels), default=1.0) < 0.05:
        return
    expected = sum(lab * p for lab, p in abl)
    mean, _ = pointer_conditional_mean(weak_pointer_amplitudes(tsv, h, GaussianPointer(1e-4)))
    assert mean == pytest.approx(expected, abs=1e-6)


def test_impossible_pointer_postselection():
    a, b = StateVector.basis(2, 0), StateVector.basis(2, 1)
    mix = weak_pointer_amplitudes(TwoStateVector(a, b), Operator.diagonal([1, -1]), GaussianPointer(1.0))
    with pytest.raises(ImpossiblePostSelection):
        pointer_moments(mix)
    with pytest.raises(ImpossiblePostSelection):
        sample_pointer(mix, RngStream(0))


@pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
def test_sampled_pointer_matches_analytic(box, box_tsv, sigma):
    mix = weak_pointer_amplitudes(box_tsv, box.observables["P_C"], GaussianPointer(sigma))
    stats = pointer_statistics(mix, 100_000, seed=5)
    assert abs(stats.sample_mean - stats.analytic_mean) <= 4 * stats.standard_error
    assert stats.sample_variance == pytest.approx(stats.analytic_variance, rel=0.03)


def test_sample_batch_workers_identical(box, box_tsv):
    mix = weak_pointer_amplitudes(box_tsv, box.observables["P_C"], GaussianPointer(1.0))
    a = sample_pointer_batch(mix, 1001, seed=3, draws=2, workers=1)
    b = sample_pointer_batch(mix, 1001, seed=3, draws=2, workers=3)
    assert np.array_equal(a, b)


# ---------------------------------------------------------- ensemble


@pytest.mark.parametrize("box_name, sign", [("P_A", 1), ("P_B", 1), ("P_C", -1)])
def test_ensemble_pressure_sign(box, box_tsv, box_name, sign):
    stats = ensemble_pressure(box_tsv, box.observables[box_name], 10, GaussianPointer(10.0), 100_000, seed=11)
    assert stats.n_particles == 10
    assert stats.analytic_mean * sign > 9.0
    assert abs(stats.sample_mean - stats.analytic_mean) <= 4 * stats.standard_error
    assert stats.bare_postselection_probability == pytest.approx(9.0**-10)


def test_ensemble_n1_equals_single(box, box_tsv):
    op = box.observables["P_C"]
    pointer = GaussianPointer(10.0)
    one = ensemble_pressure(box_tsv, op, 1, pointer, 5000, seed=2)
    single = pointer_statistics(weak_pointer_amplitudes(box_tsv, op, pointer), 5000, seed=2)
    assert one.sample_mean == single.sample_mean
    assert one.analytic_mean == single.analytic_mean


def test_ensemble_rejects_bad_n(box, box_tsv):
    with pytest.raises(ValueError):
        ensemble_pressure(box_tsv, box.observables["P_C"], 0, GaussianPointer(), 10, seed=0)
