import math

import numpy as np
import pytest

from tsvf._backend import available_backends
from tsvf.scenarios import singlet, three_box

SQ3 = math.sqrt(3.0)

BACKENDS = available_backends()

_acceptance_lines: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    _acceptance_lines.append(f"[{status}] criterion {number:2d}: {title} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(params=sorted(BACKENDS))
def kernels(request):
    return BACKENDS[request.param]


@pytest.fixture
def box():
    return three_box(1)


@pytest.fixture
def box_tsv(box):
    return box.tsv()


@pytest.fixture
def spins():
    return singlet()


def brute_amplitude(post: np.ndarray, ops: list, pre: np.ndarray) -> complex:
    """<post| op_k ... op_1 |pre> with plain numpy matrices."""
    v = np.array(pre, dtype=complex)
    for m in ops:
        v = np.asarray(m) @ v
    return complex(np.vdot(post, v))


def certain_case(rng: np.random.Generator, dim: int):
    """Random (pre, post, observable, certain eigenvalue) with an ABL-certain outcome.

    The observable has random (possibly degenerate) eigenvalues. The post
    state is built orthogonal to every P_k|pre> except the chosen one, so
    only that outcome has a nonzero ABL amplitude.
    """
    from tsvf.hilbert import Operator, StateVector, random_state

    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    n_levels = int(rng.integers(2, dim + 1)) if dim > 1 else 1
    levels = np.round(rng.uniform(-5.0, 5.0, size=n_levels), 3)
    while n_levels > 1 and np.min(np.diff(np.sort(levels))) < 1e-3:
        levels = np.round(rng.uniform(-5.0, 5.0, size=n_levels), 3)
    assign = np.concatenate([np.arange(n_levels), rng.integers(0, n_levels, size=dim - n_levels)])
    rng.shuffle(assign)
    eig = levels[assign]
    h = Operator(q @ np.diag(eig) @ q.conj().T)
    pre = random_state(dim, rng).amps
    target = int(rng.integers(0, n_levels))
    projs = {}
    for k in range(n_levels):
        cols = q[:, assign == k]
        projs[k] = cols @ cols.conj().T
    keep = projs[target] @ pre
    x = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    r = (np.eye(dim) - projs[target]) @ x
    for k, p in projs.items():
        if k == target:
            continue
        u = p @ pre
        nu = np.vdot(u, u).real
        if nu > 1e-300:
            r = r - u * (np.vdot(u, r) / nu)
    post = keep / np.linalg.norm(keep)
    nr = np.linalg.norm(r)
    if nr > 1e-8:
        # r can vanish when the other eigenspaces fill the complement
        post = post + rng.normal() * r / nr
    return (
        StateVector(pre),
        StateVector(post).normalize(),
        h,
        float(levels[target]),
    )
