"""Pre- and post-selected systems: ABL probabilities, weak values, certainty.

A :class:`TwoStateVector` holds the forward-evolved preparation and the
backward-evolved post-selection, both already propagated to the time of the
intermediate measurement. With ``post=None`` the system is pre-selected only
and every rule here reduces to the ordinary Born rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    ImpossiblePostSelection,
    NonCommuting,
    NotUnitary,
    UndefinedWeakValue,
)
from .hilbert import (
    HERMITIAN_TOL,
    Operator,
    SpectralDecomposition,
    StateVector,
    apply,
    inner,
    spectral,
)

CERTAINTY_TOL = 1e-9
IMPOSSIBLE_TOL = 1e-30
OVERLAP_TOL = 1e-12
LABEL_DECIMALS = 12


def _label(x: float) -> float:
    # collapse 0.9999999999999998 -> 1.0 and -0.0 -> 0.0 so labels are usable as keys
    return round(float(x), LABEL_DECIMALS) + 0.0


class Observable:
    """A Hermitian operator with a name and a lazily computed spectrum."""

    def __init__(self, operator: Operator, name: str = ""):
        self.operator = operator
        self.name = name

    @property
    def dim(self) -> int:
        return self.operator.dim

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return spectral(self.operator)

    def __repr__(self) -> str:
        return f"Observable({self.name!r}, dim={self.dim})"


ObservableLike = Union[Observable, Operator]


def as_observable(obs: ObservableLike, name: str = "") -> Observable:
    if isinstance(obs, Observable):
        return obs
    return Observable(obs, name)


@dataclass(frozen=True)
class TwoStateVector:
    pre: StateVector
    post: Optional[StateVector] = None

    def __post_init__(self):
        if not self.pre.is_normalized():
            raise ValueError("pre-selected state is not normalized")
        if self.post is not None:
            if self.post.dim != self.pre.dim:
                raise DimensionMismatch(
                    f"pre and post dimensions differ: {self.pre.dim} vs {self.post.dim}"
                )
            if not self.post.is_normalized():
                raise ValueError("post-selected state is not normalized")

    @property
    def dim(self) -> int:
        return self.pre.dim

    def overlap(self) -> complex:
        """<post|pre>; 1 when there is no post-selection."""
        if self.post is None:
            return 1.0 + 0.0j
        return inner(self.post, self.pre)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Outcome labels (eigenvalues or tuples of them) with probabilities."""

    outcomes: tuple

    def __post_init__(self):
        total = sum(p for _, p in self.outcomes)
        if self.outcomes and abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def labels(self) -> list:
        return [lab for lab, _ in self.outcomes]

    @property
    def probabilities(self) -> list:
        return [p for _, p in self.outcomes]

    def prob(self, label, tol: float = 1e-9) -> float:
        for lab, p in self.outcomes:
            if np.allclose(np.atleast_1d(lab), np.atleast_1d(label), rtol=0.0, atol=tol) and (
                np.size(lab) == np.size(label)
            ):
                return p
        return 0.0

    __getitem__ = prob

    def certain(self, tol: float = CERTAINTY_TOL):
        """The label carrying probability >= 1 - tol, or None."""
        for lab, p in self.outcomes:
            if p >= 1.0 - tol:
                return lab
        return None

    def marginal(self, index: int) -> "OutcomeDistribution":
        acc: dict = {}
        for lab, p in self.outcomes:
            acc[lab[index]] = acc.get(lab[index], 0.0) + p
        return OutcomeDistribution(tuple(sorted(acc.items())))

    def probability_where(self, predicate) -> float:
        return float(sum(p for lab, p in self.outcomes if predicate(lab)))

    def as_dict(self) -> dict:
        return dict(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self):
        return iter(self.outcomes)


@dataclass(frozen=True)
class ElementOfReality:
    label: str
    value: float
    probability: float


@dataclass(frozen=True)
class ProductRuleReport:
    value_a: Optional[float]
    value_b: Optional[float]
    value_ab: Optional[float]
    holds: Optional[bool]
    applicable: bool
    reason: str = ""


def selection_amplitudes(tsv: TwoStateVector, obs: ObservableLike) -> list[tuple[float, complex]]:
    """(eigenvalue, <post|P_i|pre>) for each eigenprojector P_i.

    Requires a post-selection.
    """
    if tsv.post is None:
        raise UndefinedWeakValue("selection amplitudes need a post-selected state")
    o = as_observable(obs)
    if o.dim != tsv.dim:
        raise DimensionMismatch(f"observable dim {o.dim} vs state dim {tsv.dim}")
    return [(lam, inner(tsv.post, apply(proj, tsv.pre))) for lam, proj in o.spectrum]


def abl_probabilities(tsv: TwoStateVector, obs: ObservableLike) -> OutcomeDistribution:
    """ABL outcome probabilities of an intermediate ideal measurement.

    P(a_i) = |<post|P_i|pre>|^2 / sum_k |<post|P_k|pre>|^2, or the Born rule
    ||P_i pre||^2 when there is no post-selection.
    """
    o = as_observable(obs)
    if o.dim != tsv.dim:
        raise DimensionMismatch(f"observable dim {o.dim} vs state dim {tsv.dim}")
    if tsv.post is None:
        weights = [(lam, apply(proj, tsv.pre).norm() ** 2) for lam, proj in o.spectrum]
    else:
        weights = [(lam, abs(a) ** 2) for lam, a in selection_amplitudes(tsv, o)]
    denom = sum(w for _, w in weights)
    if denom < IMPOSSIBLE_TOL:
        raise ImpossiblePostSelection(
            f"post-selection cannot succeed for any outcome of {o.name or 'the observable'}"
        )
    return OutcomeDistribution(tuple((_label(lam), w / denom) for lam, w in weights))


ScheduleEntry = tuple  # (observable, unitary applied afterwards or None)


def _check_schedule(dim: int, schedule: Sequence[ScheduleEntry]) -> list[tuple[Observable, Optional[Operator]]]:
    checked = []
    for i, entry in enumerate(schedule):
        obs, unitary = entry if isinstance(entry, tuple) else (entry, None)
        o = as_observable(obs)
        if o.dim != dim:
            raise DimensionMismatch(f"schedule entry {i}: observable dim {o.dim} vs state dim {dim}")
        if unitary is not None:
            if unitary.dim != dim:
                raise DimensionMismatch(f"schedule entry {i}: unitary dim {unitary.dim} vs {dim}")
            if not unitary.is_unitary(HERMITIAN_TOL):
                raise NotUnitary(f"schedule entry {i}: evolution operator is not unitary")
        checked.append((o, unitary))
    return checked


def _sequence_weights(pre, post, schedule):
    if post is not None and post.dim != pre.dim:
        raise DimensionMismatch(f"pre and post dimensions differ: {pre.dim} vs {post.dim}")
    steps = _check_schedule(pre.dim, schedule)
    branches = [((), pre)]
    for obs, unitary in steps:
        nxt = []
        for labels, vec in branches:
            for lam, proj in obs.spectrum:
                w = apply(proj, vec)
                if unitary is not None:
                    w = apply(unitary, w)
                nxt.append((labels + (_label(lam),), w))
        branches = nxt
    if post is None:
        return [(labels, vec.norm() ** 2) for labels, vec in branches]
    return [(labels, abs(inner(post, vec)) ** 2) for labels, vec in branches]


def sequence_probabilities(
    pre: StateVector, post: Optional[StateVector], schedule: Sequence[ScheduleEntry]
) -> OutcomeDistribution:
    """Joint outcome probabilities of a sequence of ideal measurements.

    P(a, b, ...) is proportional to |<post| ... U_2 P_b U_1 P_a |pre>|^2
    (or to the squared norm of the branch when ``post`` is None), normalized
    over every tuple of outcomes.
    """
    weights = _sequence_weights(pre, post, schedule)
    denom = sum(w for _, w in weights)
    if denom < IMPOSSIBLE_TOL:
        raise ImpossiblePostSelection("no sequence of outcomes is compatible with the post-selection")
    return OutcomeDistribution(tuple((labels, w / denom) for labels, w in weights))


def postselection_probability(
    pre: StateVector, post: Optional[StateVector], schedule: Sequence[ScheduleEntry] = ()
) -> float:
    """Chance that the post-selection succeeds after the scheduled measurements."""
    if post is None:
        return 1.0
    return float(sum(w for _, w in _sequence_weights(pre, post, schedule)))


def weak_value(tsv: TwoStateVector, op: ObservableLike) -> complex:
    """<post|A|pre> / <post|pre>. Complex in general and not bounded by the spectrum."""
    if tsv.post is None:
        raise UndefinedWeakValue("weak value needs a post-selected state")
    operator = op.operator if isinstance(op, Observable) else op
    if operator.dim != tsv.dim:
        raise DimensionMismatch(f"operator dim {operator.dim} vs state dim {tsv.dim}")
    ov = inner(tsv.post, tsv.pre)
    if abs(ov) < OVERLAP_TOL:
        raise UndefinedWeakValue("pre- and post-selected states are orthogonal")
    return inner(tsv.post, apply(operator, tsv.pre)) / ov


def _named(observables) -> Iterable[tuple[str, ObservableLike]]:
    if isinstance(observables, Mapping):
        return observables.items()
    return [(o.name, o) if isinstance(o, Observable) else o for o in observables]


def elements_of_reality(tsv: TwoStateVector, observables) -> list[ElementOfReality]:
    """Observables whose outcome is certain under the ABL rule.

    ``observables`` is a name -> observable mapping or a sequence of named
    :class:`Observable` objects / ``(name, operator)`` pairs.
    """
    found = []
    for name, obs in _named(observables):
        dist = abl_probabilities(tsv, as_observable(obs, name))
        for lab, p in dist:
            if p >= 1.0 - CERTAINTY_TOL:
                found.append(ElementOfReality(name, lab, p))
                break
    return found


def product_rule_report(tsv: TwoStateVector, a: ObservableLike, b: ObservableLike) -> ProductRuleReport:
    """Check whether certain values of A, B and AB obey value(AB) = value(A) value(B)."""
    oa = as_observable(a, "A")
    ob = as_observable(b, "B")
    if not oa.operator.commutes_with(ob.operator, HERMITIAN_TOL):
        raise NonCommuting("observables do not commute; their product is not an observable")
    ab = Observable(oa.operator @ ob.operator, f"{oa.name}*{ob.name}")
    values = []
    for o in (oa, ob, ab):
        lab = abl_probabilities(tsv, o).certain()
        values.append(None if lab is None else float(lab))
    va, vb, vab = values
    if None in values:
        missing = [o.name for o, v in zip((oa, ob, ab), values) if v is None]
        return ProductRuleReport(va, vb, vab, None, False, "no element of reality for " + ", ".join(missing))
    holds = abs(vab - va * vb) <= 1e-9
    return ProductRuleReport(va, vb, vab, holds, True)
