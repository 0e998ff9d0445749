"""Command-line front end.

    tsvf abl      --scenario three-box --observable P_A
    tsvf weak     --scenario three-box -N 3 --operator N_C
    tsvf simulate --scenario three-box --mode pressure -N 10 --sigma 10 --trials 100000 --seed 7
    tsvf check    --scenario three-box

Exit codes: 0 success (including runs where no trial survived the
post-selection), 2 usage or validation error, 3 undefined analytic quantity,
4 I/O error. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
import time
from typing import Optional

import numpy as np

from ._backend import BACKEND
from .errors import (
    ImpossiblePostSelection,
    ScenarioError,
    TSVFError,
    UndefinedWeakValue,
)
from .hilbert import Operator, tensor_all
from .measure import (
    DEFAULT_SIGMA,
    GaussianPointer,
    ensemble_pressure,
    pointer_moments,
    pointer_statistics,
    run_pre_post_experiment,
    weak_pointer_amplitudes,
)
from .report import to_csv, to_json
from .rng import derive_seed
from .scenarios import BUILTINS, ScenarioSpec, builtin, number_operator, resolve
from .twostate import (
    TwoStateVector,
    abl_probabilities,
    elements_of_reality,
    postselection_probability,
    product_rule_report,
    sequence_probabilities,
    weak_value,
)

EXIT_OK, EXIT_USAGE, EXIT_UNDEFINED, EXIT_IO = 0, 2, 3, 4
STRONG_DIM_LIMIT = 3**6
DENSE_CHECK_LIMIT = 3**6


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="three-box",
                        help=f"built-in name ({', '.join(BUILTINS)}) or path to a scenario file")
    common.add_argument("-N", dest="N", type=_positive_int, default=None, help="number of particles")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--no-timing", action="store_true", help="omit the timing field")

    parser = argparse.ArgumentParser(prog="tsvf", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("abl", parents=[common], help="ABL outcome probabilities")
    p.add_argument("--observable", required=True)

    p = sub.add_parser("weak", parents=[common], help="weak value of an operator")
    p.add_argument("--operator", "--observable", dest="operator", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo measurement runs")
    p.add_argument("--mode", choices=("strong", "weak", "pressure"), default="strong")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--sigma", type=_positive_float, default=None, help="pointer spread")
    p.add_argument("--observable", action="append", default=None,
                   help="observable to measure; repeat for a sequence (default: scenario schedule)")
    p.add_argument("--workers", type=_positive_int, default=1,
                   help="threads for the trial loop; does not change results")

    sub.add_parser("check", parents=[common], help="product-rule check over observable pairs")
    return parser


# ------------------------------------------------------------------ helpers


def _complex(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _binomial_se(p: float, n: int) -> float:
    if n == 0:
        return float("nan")
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / n)


def _outcome(label):
    return list(label) if isinstance(label, tuple) else label


def _dist_rows(dist) -> list:
    return [{"outcome": _outcome(lab), "probability": p} for lab, p in dist]


def _load(args, single_particle: bool = False) -> ScenarioSpec:
    if args.scenario in BUILTINS:
        N = 1 if single_particle else (args.N or 1)
        if args.scenario == "singlet" and args.N not in (None, 1):
            raise UsageError("the singlet scenario has no particle-number parameter")
        return builtin(args.scenario, N)
    return resolve(args.scenario)


def _require(spec: ScenarioSpec, name: str) -> None:
    if not spec.has_observable(name):
        known = ", ".join(sorted(spec.observables) + ["identity"])
        raise UsageError(f"unknown observable {name!r} for scenario {spec.name!r} (known: {known})")


def _is_three_box(spec: ScenarioSpec) -> bool:
    return spec.name.startswith("three-box")


def _rarity(n_particles: int, overlap2: float) -> dict:
    block = {
        "n_particles": n_particles,
        "analytic_rate": overlap2**n_particles,
        "analytic_rate_formula": "|<post|pre>|^(2N)",
    }
    if n_particles > 1:
        block["order_of_magnitude_claim"] = "3^-N"
        block["order_of_magnitude_claim_value"] = 3.0**-n_particles
    return block


# ----------------------------------------------------------------- commands


def cmd_abl(args) -> dict:
    spec = _load(args)
    _require(spec, args.observable)
    tsv = spec.tsv()
    dist = abl_probabilities(tsv, spec.observable(args.observable))
    certain = dist.certain()
    elements = elements_of_reality(tsv, [spec.observable(n) for n in spec.observables])
    return {
        "analytic": {
            "observable": args.observable,
            "distribution": _dist_rows(dist),
            "element_of_reality": None if certain is None else {"observable": args.observable, "value": certain},
            "elements_of_reality": [{"observable": e.label, "value": e.value} for e in elements],
        }
    }


def cmd_weak(args) -> dict:
    spec = _load(args)
    _require(spec, args.operator)
    tsv = spec.tsv()
    wv = weak_value(tsv, spec.observable(args.operator).operator)
    analytic = {
        "operator": args.operator,
        "weak_value": _complex(wv),
        "overlap": _complex(tsv.overlap()),
    }
    N = spec.n_particles or 1
    if _is_three_box(spec) and N > 1 and args.operator.startswith("N_"):
        single = builtin("three-box", 1)
        box = "P_" + args.operator[2:]
        analytic["additivity_check"] = _complex(N * weak_value(single.tsv(), single.observables[box]))
    return {"analytic": analytic}


def _pauli_relations(result, names, dist) -> dict:
    out = {}
    kept = result.outcome_index[result.postselected]
    for axis in ("x", "y", "z"):
        a, b = f"sigma_1{axis}", f"sigma_2{axis}"
        if a in names and b in names:
            i, j = names.index(a), names.index(b)
            labels_i = np.array(result.step_labels[i])[kept[:, i]]
            labels_j = np.array(result.step_labels[j])[kept[:, j]]
            n = kept.shape[0]
            freq = float(np.count_nonzero(labels_i + labels_j == 0.0)) / n if n else float("nan")
            p = dist.probability_where(lambda lab: lab[i] + lab[j] == 0.0) if dist is not None else float("nan")
            out[f"{axis}_sum_zero"] = {
                "frequency": freq,
                "se": _binomial_se(p, n),
                "n": n,
                "analytic": p,
            }
    return out


def _simulate_strong(args) -> dict:
    spec = _load(args)
    names = [(n, "identity") for n in args.observable] if args.observable else list(spec.schedule)
    for n, _ in names:
        _require(spec, n)
    if spec.dim > STRONG_DIM_LIMIT:
        raise UsageError(
            f"strong-mode Monte Carlo is limited to dim <= {STRONG_DIM_LIMIT} (scenario dim {spec.dim}); "
            "use --mode pressure for many particles"
        )
    entries = spec.schedule_entries(names)
    result = run_pre_post_experiment(spec.pre, spec.post, entries, args.trials, args.seed, args.workers)
    try:
        dist = sequence_probabilities(spec.pre, spec.post, entries)
        analytic_rows = [{"outcome": list(lab), "probability": p} for lab, p in dist]
    except ImpossiblePostSelection:
        dist, analytic_rows = None, "impossible post-selection"
    analytic = {
        "schedule": [n for n, _ in names],
        "sequence_probabilities": analytic_rows,
        "postselection_probability": postselection_probability(spec.pre, spec.post, entries),
    }
    sampled = {
        "trials": result.trials,
        "n_postselected": result.n_postselected,
        "success_rate": {"value": result.success_rate, "se": result.success_rate_se, "n": result.trials},
        "no_data": result.no_data,
    }
    if not result.no_data:
        counts = result.counts()
        n = result.n_postselected
        labels = [lab for lab, _ in dist] if dist is not None else sorted(counts)
        rows = []
        for lab in labels:
            f = counts.get(lab, 0) / n
            p = dist.prob(lab) if dist is not None else f
            rows.append({"outcome": list(lab), "frequency": f, "se": _binomial_se(p, n), "n": n})
        sampled["frequencies"] = rows
        rel = _pauli_relations(result, [nm for nm, _ in names], dist)
        if rel:
            sampled["relations"] = rel
    report = {"analytic": analytic, "sampled": sampled}
    if _is_three_box(spec):
        single = builtin("three-box", 1)
        report["postselection"] = _rarity(spec.n_particles or 1, abs(single.tsv().overlap()) ** 2)
    return report


def _simulate_weak(args) -> dict:
    spec = _load(args)
    tsv = spec.tsv()
    if tsv.post is None:
        raise UndefinedWeakValue("weak mode needs a post-selected scenario")
    names = args.observable or list(spec.observables)
    for n in names:
        _require(spec, n)
    pointer = GaussianPointer(args.sigma or spec.pointer_sigma or DEFAULT_SIGMA)
    analytic, sampled = {}, {}
    for i, name in enumerate(names):
        obs = spec.observable(name)
        mixture = weak_pointer_amplitudes(tsv, obs, pointer)
        m = pointer_moments(mixture)
        dist = abl_probabilities(tsv, obs)
        stats = pointer_statistics(mixture, args.trials, derive_seed(args.seed, i), workers=args.workers)
        analytic[name] = {
            "weak_value": _complex(weak_value(tsv, obs)),
            "pointer_mean": m.mean,
            "pointer_variance": m.variance,
            "postselection_probability": m.postselect_probability,
            "strong_limit_mean": sum(lab * p for lab, p in dist),
        }
        sampled[name] = {
            "mean": stats.sample_mean,
            "variance": stats.sample_variance,
            "se": stats.standard_error,
            "n": stats.n_trials,
        }
    return {"analytic": analytic, "sampled": sampled}


def _is_projector(op: Operator) -> bool:
    return op.is_hermitian() and float(np.max(np.abs((op @ op - op).matrix))) <= 1e-9


def _simulate_pressure(args) -> dict:
    spec = _load(args, single_particle=True)
    tsv = spec.tsv()
    if tsv.post is None:
        raise UndefinedWeakValue("pressure mode needs a post-selected scenario")
    N = args.N or spec.n_particles or 1
    names = args.observable or [n for n, op in spec.observables.items() if _is_projector(op)]
    if not names:
        raise UsageError("no projector observables to use as boxes; pass --observable")
    for n in names:
        _require(spec, n)
    pointer = GaussianPointer(args.sigma or spec.pointer_sigma or DEFAULT_SIGMA)
    dense_tsv = None
    if spec.dim**N <= DENSE_CHECK_LIMIT:
        dense_tsv = TwoStateVector(tensor_all([spec.pre] * N), tensor_all([spec.post] * N))
    analytic, sampled = {}, {}
    for i, name in enumerate(names):
        obs = spec.observable(name)
        stats = ensemble_pressure(tsv, obs, N, pointer, args.trials, derive_seed(args.seed, i), args.workers)
        single_wv = weak_value(tsv, obs)
        entry = {
            "single_particle_weak_value": _complex(single_wv),
            "number_operator_weak_value": _complex(N * single_wv),
            "number_operator_method": "additivity",
            "pointer_mean": stats.analytic_mean,
            "pointer_variance": stats.analytic_variance,
            "postselection_probability_with_pointer": stats.analytic_postselection_probability,
        }
        if dense_tsv is not None:
            entry["number_operator_weak_value"] = _complex(weak_value(dense_tsv, number_operator(obs.operator, N)))
            entry["number_operator_method"] = "dense"
        analytic[name] = entry
        sampled[name] = {
            "mean": stats.sample_mean,
            "variance": stats.sample_variance,
            "se": stats.standard_error,
            "n": stats.n_trials,
        }
    report = {"analytic": analytic, "sampled": sampled}
    report["postselection"] = _rarity(N, abs(tsv.overlap()) ** 2)
    return report


def cmd_simulate(args) -> dict:
    return {"strong": _simulate_strong, "weak": _simulate_weak, "pressure": _simulate_pressure}[args.mode](args)


def cmd_check(args) -> dict:
    spec = _load(args)
    tsv = spec.tsv()
    names = list(spec.observables)
    pairs = []
    for i, a in enumerate(names):
        for b in names[i:]:
            oa, ob = spec.observable(a), spec.observable(b)
            if not oa.operator.commutes_with(ob.operator):
                continue
            rep = product_rule_report(tsv, oa, ob)
            if rep.applicable:
                pairs.append({
                    "a": a, "b": b,
                    "value_a": rep.value_a, "value_b": rep.value_b, "value_ab": rep.value_ab,
                    "holds": rep.holds,
                })
    violations = [p for p in pairs if not p["holds"]]
    if not pairs:
        status = "no applicable pairs"
    elif violations:
        status = "product rule violated"
    else:
        status = "product rule holds"
    return {"analytic": {"status": status, "pairs": pairs, "violations": violations}}


COMMANDS = {"abl": cmd_abl, "weak": cmd_weak, "simulate": cmd_simulate, "check": cmd_check}


def _parameters(args) -> dict:
    params = {"N": args.N}
    if args.command == "simulate":
        params.update(mode=args.mode, trials=args.trials, seed=args.seed, sigma=args.sigma)
    params["backend"] = BACKEND
    return params


def run(argv: Optional[list] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        body = COMMANDS[args.command](args)
    except (UsageError, ScenarioError) as exc:
        print(f"tsvf: error: {exc}", file=stderr)
        return EXIT_USAGE
    except UndefinedWeakValue as exc:
        print(f"tsvf: undefined weak value: {exc}", file=stderr)
        return EXIT_UNDEFINED
    except ImpossiblePostSelection as exc:
        print(f"tsvf: impossible post-selection: {exc}", file=stderr)
        return EXIT_UNDEFINED
    except OSError as exc:
        print(f"tsvf: I/O error: {exc}", file=stderr)
        return EXIT_IO
    except TSVFError as exc:
        print(f"tsvf: error: {exc}", file=stderr)
        return EXIT_USAGE
    report = {"scenario": args.scenario, "command": args.command, "parameters": _parameters(args)}
    report.update(body)
    if not args.no_timing:
        report["timing"] = {"seconds": time.perf_counter() - t0}
    stdout.write(to_json(report) if args.format == "json" else to_csv(report))
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
