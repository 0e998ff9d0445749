"""Built-in scenarios and the JSON scenario file format.

Scenario file (``format: "tsvf-scenario/1"``)::

    {
      "format": "tsvf-scenario/1",
      "name": "optional label",
      "dim": 3,
      "pre":  [[re, im], ...],                 # dim entries
      "post": [[re, im], ...] | null,          # optional; null = pre-selected only
      "observables": {"P_A": [[[re, im], ...], ...], ...},   # dim x dim, Hermitian
      "unitaries":   {"U": [[[re, im], ...], ...], ...},     # optional, unitary
      "schedule": [{"observable": "P_A", "unitary": "identity"}, ...],
      "pointer_sigma": 10.0,                   # optional
      "n_particles": 1                         # optional
    }

The name ``identity`` always resolves, as observable and as unitary. Basis
order: three-box A=0, B=1, C=2; two spins (up,up), (up,down), (down,up),
(down,down). States compare equal up to a global phase.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionBudgetExceeded, ScenarioError
from .hilbert import HERMITIAN_TOL, Operator, StateVector, embed, tensor_all
from .twostate import Observable, TwoStateVector

FORMAT = "tsvf-scenario/1"
DEFAULT_DIM_BUDGET = 3**12
NORM_ERROR_TOL = 1e-6
BUILTINS = ("three-box", "singlet")


def dim_budget() -> int:
    raw = os.environ.get("TSVF_DIM_BUDGET")
    if not raw:
        return DEFAULT_DIM_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ScenarioError(f"TSVF_DIM_BUDGET must be an integer, got {raw!r}") from None
    if value < 1:
        raise ScenarioError("TSVF_DIM_BUDGET must be positive")
    return value


@dataclass(eq=False)
class ScenarioSpec:
    name: str
    dim: int
    pre: StateVector
    post: Optional[StateVector]
    observables: dict
    unitaries: dict = field(default_factory=dict)
    schedule: list = field(default_factory=list)
    pointer_sigma: Optional[float] = None
    n_particles: Optional[int] = None

    def __post_init__(self):
        self._cache: dict = {}
        self.validate()

    def validate(self) -> None:
        for label, st in (("pre", self.pre), ("post", self.post)):
            if st is None:
                continue
            if st.dim != self.dim:
                raise ScenarioError(f"{label} state has dim {st.dim}, scenario dim is {self.dim}")
            if not st.is_normalized():
                raise ScenarioError(f"{label} state not normalized (norm {st.norm():.12g})")
        for kind, ops, check in (
            ("observable", self.observables, Operator.is_hermitian),
            ("unitary", self.unitaries, Operator.is_unitary),
        ):
            for name, op in ops.items():
                if op.dim != self.dim:
                    raise ScenarioError(f"{kind} {name!r} has dim {op.dim}, scenario dim is {self.dim}")
                if not check(op, HERMITIAN_TOL):
                    adjective = "Hermitian" if kind == "observable" else "unitary"
                    raise ScenarioError(f"{kind} {name!r} is not {adjective}")
        for i, (obs, uni) in enumerate(self.schedule):
            if obs != "identity" and obs not in self.observables:
                raise ScenarioError(f"schedule entry {i}: unknown observable {obs!r}")
            if uni != "identity" and uni not in self.unitaries:
                raise ScenarioError(f"schedule entry {i}: unknown unitary {uni!r}")
        if self.pointer_sigma is not None and not self.pointer_sigma > 0:
            raise ScenarioError("pointer_sigma must be positive")
        if self.n_particles is not None and self.n_particles < 1:
            raise ScenarioError("n_particles must be >= 1")

    def tsv(self) -> TwoStateVector:
        return TwoStateVector(self.pre, self.post)

    def has_observable(self, name: str) -> bool:
        return name == "identity" or name in self.observables

    def observable(self, name: str) -> Observable:
        if name not in self._cache:
            if name == "identity":
                op = Operator.identity(self.dim)
            elif name in self.observables:
                op = self.observables[name]
            else:
                known = ", ".join(sorted(self.observables) + ["identity"])
                raise KeyError(f"unknown observable {name!r} (known: {known})")
            self._cache[name] = Observable(op, name)
        return self._cache[name]

    def unitary(self, name: str) -> Optional[Operator]:
        if name == "identity":
            return None
        return self.unitaries[name]

    def schedule_entries(self, schedule=None) -> list:
        return [(self.observable(o), self.unitary(u)) for o, u in (schedule or self.schedule)]


def three_box(N: int = 1, budget: Optional[int] = None) -> ScenarioSpec:
    """Pre-selection (A+B+C)/sqrt3, post-selection (A+B-C)/sqrt3, per particle.

    For N > 1 the scenario is the N-fold tensor power with number operators
    ``N_A``, ``N_B``, ``N_C`` (stored diagonally).
    """
    if N < 1:
        raise ScenarioError("N must be >= 1")
    pre1 = StateVector(np.ones(3) / math.sqrt(3.0))
    post1 = StateVector(np.array([1.0, 1.0, -1.0]) / math.sqrt(3.0))
    if N == 1:
        observables = {
            "P_A": Operator.diagonal([1, 0, 0]),
            "P_B": Operator.diagonal([0, 1, 0]),
            "P_C": Operator.diagonal([0, 0, 1]),
            "X": Operator.diagonal([0, 1, 2]),
        }
        return ScenarioSpec(
            "three-box", 3, pre1, post1, observables,
            schedule=[("P_A", "identity")], pointer_sigma=10.0, n_particles=1,
        )
    limit = budget if budget is not None else dim_budget()
    if 3**N > limit:
        raise DimensionBudgetExceeded(
            f"three-box with N={N} needs 3^{N} = {3**N} amplitudes, over the dense budget {limit}; "
            "use the factorized ensemble (simulate --mode pressure) instead"
        )
    pre = tensor_all([pre1] * N)
    post = tensor_all([post1] * N)
    digits = (np.arange(3**N)[:, None] // (3 ** np.arange(N - 1, -1, -1))[None, :]) % 3
    observables = {
        f"N_{box}": Operator.diagonal((digits == k).sum(axis=1).astype(float))
        for k, box in enumerate("ABC")
    }
    return ScenarioSpec(
        f"three-box-N{N}", 3**N, pre, post, observables,
        schedule=[], pointer_sigma=10.0, n_particles=N,
    )


def number_operator(single: Operator, N: int) -> Operator:
    """sum_i single^(i) on the N-fold tensor power (dense reference construction)."""
    dims = [single.dim] * N
    total = embed(single, 0, dims)
    for i in range(1, N):
        total = total + embed(single, i, dims)
    return total


PAULI = {
    "x": Operator([[0, 1], [1, 0]]),
    "y": Operator([[0, -1j], [1j, 0]]),
    "z": Operator([[1, 0], [0, -1]]),
}


def singlet() -> ScenarioSpec:
    """(|up,down> - |down,up>)/sqrt2, pre-selected only."""
    pre = StateVector(np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0))
    observables = {}
    for axis in ("x", "y"):
        for site in (0, 1):
            observables[f"sigma_{site + 1}{axis}"] = embed(PAULI[axis], site, [2, 2])
    schedule = [(name, "identity") for name in ("sigma_1x", "sigma_2x", "sigma_1y", "sigma_2y")]
    return ScenarioSpec("singlet", 4, pre, None, observables, schedule=schedule)


def builtin(name: str, N: int = 1) -> ScenarioSpec:
    if name == "three-box":
        return three_box(N)
    if name == "singlet":
        return singlet()
    raise ScenarioError(f"unknown built-in scenario {name!r} (known: {', '.join(BUILTINS)})")


# ---------------------------------------------------------------- file format


def _vector(doc, key: str, dim: int) -> np.ndarray:
    raw = doc[key]
    if not isinstance(raw, list) or len(raw) != dim:
        raise ScenarioError(f"{key!r} must be a list of {dim} [re, im] pairs")
    try:
        return np.array([complex(float(re), float(im)) for re, im in raw])
    except (TypeError, ValueError):
        raise ScenarioError(f"{key!r} entries must be [re, im] number pairs") from None


def _matrix(raw, where: str, dim: int) -> Operator:
    if not isinstance(raw, list) or len(raw) != dim or any(not isinstance(r, list) or len(r) != dim for r in raw):
        raise ScenarioError(f"{where} must be a {dim}x{dim} matrix of [re, im] pairs")
    try:
        return Operator([[complex(float(re), float(im)) for re, im in row] for row in raw])
    except (TypeError, ValueError):
        raise ScenarioError(f"{where} entries must be [re, im] number pairs") from None


def _state(amps: np.ndarray, key: str) -> StateVector:
    norm = float(np.sqrt(np.vdot(amps, amps).real))
    if abs(norm - 1.0) > NORM_ERROR_TOL:
        raise ScenarioError(f"{key!r} state not normalized (norm {norm:.9g})")
    if abs(norm - 1.0) > 1e-12:
        warnings.warn(f"{key!r} state norm {norm:.15g} renormalized", stacklevel=3)
        amps = amps / norm
    return StateVector(amps)


def load_scenario(document: Union[str, bytes, dict]) -> ScenarioSpec:
    """Parse and validate a scenario document (JSON text or decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    if doc.get("format") != FORMAT:
        raise ScenarioError(f"missing or unsupported 'format' (expected {FORMAT!r})")
    for key in ("dim", "pre", "observables"):
        if key not in doc:
            raise ScenarioError(f"missing required field {key!r}")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ScenarioError("'dim' must be a positive integer")

    pre = _state(_vector(doc, "pre", dim), "pre")
    post = None if doc.get("post") is None else _state(_vector(doc, "post", dim), "post")
    if not isinstance(doc["observables"], dict):
        raise ScenarioError("'observables' must be an object of name -> matrix")
    observables = {n: _matrix(m, f"observable {n!r}", dim) for n, m in doc["observables"].items()}
    unitaries_raw = doc.get("unitaries") or {}
    if not isinstance(unitaries_raw, dict):
        raise ScenarioError("'unitaries' must be an object of name -> matrix")
    unitaries = {n: _matrix(m, f"unitary {n!r}", dim) for n, m in unitaries_raw.items()}

    schedule = []
    for i, entry in enumerate(doc.get("schedule") or []):
        if not isinstance(entry, dict) or "observable" not in entry:
            raise ScenarioError(f"schedule entry {i} must be an object with an 'observable' key")
        obs = entry["observable"]
        uni = entry.get("unitary", "identity")
        if obs != "identity" and obs not in observables:
            raise ScenarioError(f"schedule entry {i}: missing observable {obs!r}")
        if uni != "identity" and uni not in unitaries:
            raise ScenarioError(f"schedule entry {i}: missing unitary {uni!r}")
        schedule.append((obs, uni))

    sigma = doc.get("pointer_sigma")
    n_particles = doc.get("n_particles")
    return ScenarioSpec(
        str(doc.get("name", "custom")), dim, pre, post, observables, unitaries, schedule,
        None if sigma is None else float(sigma),
        None if n_particles is None else int(n_particles),
    )


def _pairs(a: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in a]


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    doc = {
        "format": FORMAT,
        "name": spec.name,
        "dim": spec.dim,
        "pre": _pairs(spec.pre.amps),
        "post": None if spec.post is None else _pairs(spec.post.amps),
        "observables": {n: [_pairs(r) for r in op.matrix] for n, op in spec.observables.items()},
        "unitaries": {n: [_pairs(r) for r in op.matrix] for n, op in spec.unitaries.items()},
        "schedule": [{"observable": o, "unitary": u} for o, u in spec.schedule],
    }
    if spec.pointer_sigma is not None:
        doc["pointer_sigma"] = spec.pointer_sigma
    if spec.n_particles is not None:
        doc["n_particles"] = spec.n_particles
    return doc


def save_scenario(spec: ScenarioSpec) -> str:
    return json.dumps(scenario_to_dict(spec), indent=2)


def equivalent(a: ScenarioSpec, b: ScenarioSpec, tol: float = 1e-12) -> bool:
    """Semantic equality; states are compared up to global phase."""
    if a.dim != b.dim or (a.post is None) != (b.post is None):
        return False
    if not a.pre.equal_up_to_phase(b.pre, tol):
        return False
    if a.post is not None and not a.post.equal_up_to_phase(b.post, tol):
        return False
    for mine, theirs in ((a.observables, b.observables), (a.unitaries, b.unitaries)):
        if set(mine) != set(theirs):
            return False
        for name in mine:
            if np.max(np.abs(mine[name].matrix - theirs[name].matrix)) > tol:
                return False
    return (
        list(a.schedule) == list(b.schedule)
        and a.pointer_sigma == b.pointer_sigma
        and a.n_particles == b.n_particles
    )


def resolve(name_or_path: str, N: Optional[int] = None) -> ScenarioSpec:
    """Built-in scenario by name, otherwise a scenario file path.

    Raises OSError for unreadable files.
    """
    if name_or_path in BUILTINS:
        return builtin(name_or_path, N or 1)
    with open(name_or_path, encoding="utf-8") as fh:
        return load_scenario(fh.read())
