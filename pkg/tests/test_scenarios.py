import json
import math
import warnings

import numpy as np
import pytest

from tsvf.errors import DimensionBudgetExceeded, ScenarioError
from tsvf.hilbert import StateVector
from tsvf.scenarios import (
    FORMAT,
    builtin,
    equivalent,
    load_scenario,
    number_operator,
    resolve,
    save_scenario,
    scenario_to_dict,
    three_box,
)


def _minimal(**over):
    doc = {
        "format": FORMAT,
        "dim": 2,
        "pre": [[1, 0], [0, 0]],
        "post": [[0.6, 0], [0.8, 0]],
        "observables": {"Z": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]},
        "schedule": [{"observable": "Z"}],
    }
    doc.update(over)
    return doc


def test_three_box_states(box):
    s = 1 / math.sqrt(3)
    np.testing.assert_allclose(box.pre.amps, [s, s, s])
    np.testing.assert_allclose(box.post.amps, [s, s, -s])
    assert box.schedule == [("P_A", "identity")]
    assert box.pointer_sigma == 10.0


def test_three_box_many_particles_uses_number_operators():
    spec = three_box(3)
    assert spec.dim == 27
    assert spec.observables["N_C"].is_diagonal_form
    dense = number_operator(three_box(1).observables["P_C"], 3)
    np.testing.assert_allclose(spec.observables["N_C"].matrix, dense.matrix)


def test_three_box_budget():
    with pytest.raises(DimensionBudgetExceeded, match="pressure"):
        three_box(5, budget=100)


def test_budget_from_env(monkeypatch):
    monkeypatch.setenv("TSVF_DIM_BUDGET", "10")
    with pytest.raises(DimensionBudgetExceeded):
        three_box(3)


def test_singlet(spins):
    assert spins.dim == 4
    assert spins.post is None
    np.testing.assert_allclose(spins.pre.amps, [0, 1 / math.sqrt(2), -1 / math.sqrt(2), 0])
    assert [o for o, _ in spins.schedule] == ["sigma_1x", "sigma_2x", "sigma_1y", "sigma_2y"]


def test_builtin_unknown():
    with pytest.raises(ScenarioError, match="unknown"):
        builtin("four-box")


@pytest.mark.parametrize("spec_factory", [lambda: three_box(1), lambda: three_box(2), lambda: builtin("singlet")])
def test_round_trip(spec_factory):
    spec = spec_factory()
    again = load_scenario(save_scenario(spec))
    assert equivalent(spec, again)
    assert scenario_to_dict(again) == scenario_to_dict(spec)


def test_round_trip_through_file(tmp_path, box):
    p = tmp_path / "box.json"
    p.write_text(save_scenario(box))
    assert equivalent(resolve(str(p)), box)


def test_resolve_missing_file(tmp_path):
    with pytest.raises(OSError):
        resolve(str(tmp_path / "nope.json"))


def test_global_phase_equivalence(box):
    doc = scenario_to_dict(box)
    ph = complex(math.cos(0.7), math.sin(0.7))
    doc["pre"] = [[(complex(*z) * ph).real, (complex(*z) * ph).imag] for z in doc["pre"]]
    assert equivalent(load_scenario(doc), box)
    doc["pre"][0] = [-doc["pre"][0][0], -doc["pre"][0][1]]
    assert not equivalent(load_scenario(doc), box)


def test_load_minimal():
    spec = load_scenario(json.dumps(_minimal()))
    assert spec.dim == 2
    assert spec.schedule == [("Z", "identity")]
    assert isinstance(spec.post, StateVector)


def test_not_normalized_is_actionable():
    with pytest.raises(ScenarioError, match="not normalized"):
        load_scenario(_minimal(pre=[[0.9, 0], [0, 0]]))


def test_tiny_norm_error_is_renormalized():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = load_scenario(_minimal(pre=[[1 + 1e-8, 0], [0, 0]]))
    assert spec.pre.is_normalized()
    assert caught


def test_missing_observable_is_actionable():
    with pytest.raises(ScenarioError, match="missing observable 'X'"):
        load_scenario(_minimal(schedule=[{"observable": "X"}]))


def test_missing_unitary():
    with pytest.raises(ScenarioError, match="missing unitary 'U'"):
        load_scenario(_minimal(schedule=[{"observable": "Z", "unitary": "U"}]))


def test_non_hermitian_observable():
    bad = {"A": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}
    with pytest.raises(ScenarioError, match="observable 'A' is not Hermitian"):
        load_scenario(_minimal(observables=bad, schedule=[]))


def test_non_unitary_rejected():
    with pytest.raises(ScenarioError, match="not unitary"):
        load_scenario(_minimal(unitaries={"U": [[[2, 0], [0, 0]], [[0, 0], [1, 0]]]}))


@pytest.mark.parametrize(
    "over, msg",
    [
        ({"format": "other"}, "format"),
        ({"dim": 0}, "dim"),
        ({"pre": [[1, 0]]}, "pre"),
        ({"observables": {"Z": [[[1, 0]]]}}, "2x2"),
        ({"pre": [["a", 0], [0, 0]]}, "number"),
    ],
)
def test_malformed_documents(over, msg):
    with pytest.raises(ScenarioError, match=msg):
        load_scenario(_minimal(**over))


def test_invalid_json():
    with pytest.raises(ScenarioError, match="JSON"):
        load_scenario("{not json")


def test_identity_is_implicit(box):
    assert box.observable("identity").spectrum.eigenvalues == (1.0,)
    assert box.unitary("identity") is None
