"""Task-independent memory capacity from Legendre-product targets.

The capacity of a reservoir for one target ŷ is the squared norm of the
projection of ŷ onto the column space of the (column-centered) state matrix,

    C = ŷᵀ S (SᵀS)⁺ Sᵀ ŷ / ‖ŷ‖²  =  ‖Qᵀŷ‖² / ‖ŷ‖²,

with Q an orthonormal basis of col(S).  Targets are finite products of
normalized Legendre polynomials of past inputs; delay i = 1 refers to the
newest input the sampled state has seen (the one driving its own clock
cycle), i = 2 to the one before, and so on.  The degree-d memory capacity
MC^d sums the capacities of all targets of total degree d, and the total
capacity MC = Σ_d MC^d is bounded by the number of linearly independent
readout dimensions N_V.

Exhaustive enumeration over all delay combinations is infeasible beyond
degree 1, so multi-delay targets are restricted to delay sets spanning at
most ``window`` steps, and scanning stops after ``stall_limit`` consecutive
delays (bases) contribute nothing above the cutoff.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterator

import numpy as np

from .reservoir import InputSequence, StateMatrix

__all__ = [
    "TaskSpec",
    "CapacityReport",
    "legendre_normalized",
    "legendre_table",
    "target_from_task",
    "capacity",
    "capacity_dambre",
    "orthonormal_basis",
    "CapacityEvaluator",
    "enumerate_tasks",
    "memory_capacity",
]

RANK_TOL = 1e-10  # singular values below RANK_TOL * s_max are treated as zero


def legendre_normalized(d: int, u: np.ndarray | float):
    """sqrt(2d+1) * P_d(u): unit mean square under u ~ U[-1,1]."""
    if d < 0:
        raise ValueError("degree must be non-negative")
    arr = np.asarray(u, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise ValueError("inputs must lie in [-1, 1]")
    table = legendre_table(arr, d, _validate=False)
    out = table[d]
    return out if isinstance(u, np.ndarray) else float(out[0])


def legendre_table(u: np.ndarray, d_max: int, _validate: bool = True) -> np.ndarray:
    """Rows 0..d_max of sqrt(2d+1) * P_d evaluated on u (Bonnet recurrence)."""
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if _validate and np.any(np.abs(arr) > 1.0 + 1e-12):
        raise ValueError("inputs must lie in [-1, 1]")
    table = np.empty((d_max + 1, arr.shape[0]))
    table[0] = 1.0
    if d_max >= 1:
        table[1] = arr
    for d in range(1, d_max):
        table[d + 1] = ((2 * d + 1) * arr * table[d] - d * table[d - 1]) / (d + 1)
    for d in range(d_max + 1):
        table[d] *= math.sqrt(2 * d + 1)
    return table


@dataclass(frozen=True)
class TaskSpec:
    """One Legendre-product target: pairs of (delay, degree), delays distinct."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        pairs = tuple(sorted((int(i), int(d)) for i, d in self.pairs))
        if not pairs:
            raise ValueError("task needs at least one (delay, degree) pair")
        delays = [i for i, _ in pairs]
        if any(i < 1 for i in delays):
            raise ValueError(f"delays must be >= 1, got {delays}")
        if len(set(delays)) != len(delays):
            raise ValueError(f"delays must be distinct, got {delays}")
        if any(d < 1 for _, d in pairs):
            raise ValueError("degrees must be >= 1")
        object.__setattr__(self, "pairs", pairs)

    @property
    def degree(self) -> int:
        return sum(d for _, d in self.pairs)

    @property
    def max_delay(self) -> int:
        return max(i for i, _ in self.pairs)

    def __str__(self) -> str:
        return "*".join(f"P{d}(u[-{i}])" for i, d in self.pairs)


def target_from_task(
    task: TaskSpec,
    inputs: InputSequence | np.ndarray,
    offset: int,
    length: int,
) -> np.ndarray:
    """Target vector ŷ for rows j = 0..length-1 of a state matrix.

    Row j saw input ``offset + j`` as its newest, so delay i recalls input
    ``offset + j + 1 - i``.
    """
    u = inputs.values if isinstance(inputs, InputSequence) else np.asarray(inputs)
    if offset + 1 - task.max_delay < 0:
        raise ValueError(
            f"insufficient history: delay {task.max_delay} needs offset >= "
            f"{task.max_delay - 1}, got {offset}"
        )
    if offset + length > len(u):
        raise ValueError("inputs shorter than offset + length")
    y = np.ones(length)
    for i, d in task.pairs:
        j0 = offset + 1 - i
        y *= legendre_normalized(d, u[j0 : j0 + length])
    return y


def orthonormal_basis(S: np.ndarray) -> np.ndarray:
    """Rank-revealing orthonormal basis of the column space (via SVD)."""
    U, sv, _ = np.linalg.svd(np.asarray(S, dtype=float), full_matrices=False)
    if len(sv) == 0 or sv[0] == 0.0:
        return U[:, :0]
    rank = int(np.sum(sv > RANK_TOL * sv[0]))
    return U[:, :rank]


def _center(v: np.ndarray) -> np.ndarray:
    return v - v.mean()


def capacity(S: np.ndarray, y: np.ndarray) -> float:
    """Projection-form capacity of one target against one state matrix.

    Both the state columns and the target are mean-centered before the
    projection; the result is clamped to [0, 1].
    """
    X = np.asarray(S, dtype=float)
    yc = _center(np.asarray(y, dtype=float))
    norm = yc @ yc
    if norm == 0.0:
        raise ValueError("target has zero variance")
    Q = orthonormal_basis(X - X.mean(axis=0))
    g = Q.T @ yc
    return min(1.0, float((g @ g) / norm))


def capacity_dambre(S: np.ndarray, y: np.ndarray) -> float:
    """Correlation-form capacity Σ_ij <ŷ s_i><s_i s_j>⁻¹<s_j ŷ> / <ŷ²>.

    Direct evaluation of the correlation-matrix expression, with a
    pseudoinverse for singular correlation matrices.  Test oracle for
    `capacity`; quadratic in N_V per call.
    """
    X = np.asarray(S, dtype=float)
    X = X - X.mean(axis=0)
    yc = _center(np.asarray(y, dtype=float))
    norm = yc @ yc
    if norm == 0.0:
        raise ValueError("target has zero variance")
    corr = X.T @ X
    ys = X.T @ yc
    val = ys @ (np.linalg.pinv(corr, rcond=RANK_TOL) @ ys) / norm
    return min(1.0, float(val))


class CapacityEvaluator:
    """Shared orthonormal basis for evaluating many targets on one matrix."""

    def __init__(self, S: np.ndarray | StateMatrix):
        X = S.S if isinstance(S, StateMatrix) else np.asarray(S, dtype=float)
        self.L = X.shape[0]
        self.Q = orthonormal_basis(X - X.mean(axis=0))
        self.rank = self.Q.shape[1]
        self._qsum = self.Q.sum(axis=0)  # Qᵀ·1, for centering targets implicitly

    def evaluate(self, y: np.ndarray) -> float:
        return float(self.evaluate_block(y[:, None])[0])

    def evaluate_block(self, Y: np.ndarray) -> np.ndarray:
        """Capacities of the columns of Y (uncentered targets)."""
        if Y.shape[0] != self.L:
            raise ValueError("target length mismatch")
        means = Y.mean(axis=0)
        G = self.Q.T @ Y - np.outer(self._qsum, means)
        num = np.einsum("ij,ij->j", G, G)
        den = np.einsum("ij,ij->j", Y, Y) - self.L * means * means
        out = np.zeros(Y.shape[1])
        ok = den > 0.0
        out[ok] = np.minimum(1.0, num[ok] / den[ok])
        return out


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ordered splits of `total` into `parts` positive integers."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _tasks_for_base(d: int, base: int, window: int, max_delay: int) -> list[TaskSpec]:
    """Degree-d tasks whose smallest delay is `base`, span <= window."""
    others = range(base + 1, min(base + window, max_delay) + 1)
    tasks = []
    for m in range(1, min(d, len(others) + 1) + 1):
        for extra in combinations(others, m - 1):
            delays = (base,) + extra
            for comp in _compositions(d, m):
                tasks.append(TaskSpec(tuple(zip(delays, comp))))
    return tasks


def enumerate_tasks(
    d: int,
    max_delay: int,
    window: int = 30,
    evaluate: Callable[[TaskSpec], float] | None = None,
    stall_limit: int = 50,
    cutoff: float = 0.001,
) -> Iterator[TaskSpec]:
    """Stream degree-d tasks in base-delay order.

    For d = 1 the stream is the single-delay tasks {(i, 1)}; for d >= 2 every
    composition of d over delay sets contained in [base, base + window].
    When an ``evaluate`` callback is supplied, its capacities feed the stall
    rule: after ``stall_limit`` consecutive bases (delays, for d = 1) whose
    tasks all fall below ``cutoff``, enumeration stops early.
    """
    if d < 1:
        raise ValueError("degree must be >= 1")
    quiet = 0
    for base in range(1, max_delay + 1):
        tasks = (
            [TaskSpec(((base, 1),))] if d == 1 else _tasks_for_base(d, base, window, max_delay)
        )
        hit = False
        for task in tasks:
            yield task
            if evaluate is not None and evaluate(task) >= cutoff:
                hit = True
        if evaluate is not None:
            quiet = 0 if hit else quiet + 1
            if quiet >= stall_limit:
                return


@dataclass
class CapacityReport:
    """Degree-resolved memory capacities and the evaluation bookkeeping."""

    per_degree: dict[int, float]
    cutoff: float
    n_evaluated: int
    n_retained: int
    tasks: list[tuple[TaskSpec, float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.per_degree.values())

    def mc(self, d: int) -> float:
        return self.per_degree.get(d, 0.0)

    def to_json(self, path: str | None = None, include_tasks: bool = True) -> str:
        doc = {
            "schema": 1,
            "total": self.total,
            "per_degree": {str(d): v for d, v in sorted(self.per_degree.items())},
            "cutoff": self.cutoff,
            "n_evaluated": self.n_evaluated,
            "n_retained": self.n_retained,
            "meta": self.meta,
        }
        if include_tasks:
            doc["tasks"] = [
                {"pairs": list(map(list, t.pairs)), "capacity": c}
                for t, c in self.tasks
            ]
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, text: str) -> "CapacityReport":
        doc = json.loads(text)
        if doc.get("schema") != 1:
            raise ValueError(f"unsupported schema {doc.get('schema')}")
        tasks = [
            (TaskSpec(tuple(tuple(p) for p in item["pairs"])), float(item["capacity"]))
            for item in doc.get("tasks", [])
        ]
        return cls(
            per_degree={int(k): float(v) for k, v in doc["per_degree"].items()},
            cutoff=float(doc["cutoff"]),
            n_evaluated=int(doc["n_evaluated"]),
            n_retained=int(doc["n_retained"]),
            tasks=tasks,
            meta=doc.get("meta", {}),
        )


_BLOCK_COLS = 128  # bound the target-block working set to a few dozen MB


def memory_capacity(
    S: StateMatrix | np.ndarray,
    inputs: InputSequence | np.ndarray,
    D_max: int = 5,
    cutoff: float = 0.001,
    max_delay: int = 100,
    window: int = 30,
    stall_limit: int = 50,
    offset: int | None = None,
    keep_tasks: bool = False,
) -> CapacityReport:
    """Sum retained per-task capacities into MC^d for d = 1..D_max.

    ``offset`` is taken from the state matrix when available.  Retained means
    capacity >= cutoff; the cutoff also drives the stall rule through
    `enumerate_tasks` semantics (scan past a delay region once it stops
    contributing).  The cutoff should stay above the per-task noise floor,
    which concentrates around rank/L with a chi-squared tail.
    """
    if isinstance(S, StateMatrix):
        off = S.offset if offset is None else offset
    else:
        if offset is None:
            raise ValueError("offset is required for a bare array state matrix")
        off = offset
    u = inputs.values if isinstance(inputs, InputSequence) else np.asarray(inputs)
    if D_max < 1:
        raise ValueError("D_max must be >= 1")
    if max_delay > off + 1:
        raise ValueError(
            f"max_delay={max_delay} exceeds available history (offset={off})"
        )
    ev = CapacityEvaluator(S)
    L = ev.L
    if off + L > len(u):
        raise ValueError("inputs shorter than offset + L")
    table = legendre_table(u, D_max)

    def column(i: int, d: int) -> np.ndarray:
        j0 = off + 1 - i
        return table[d][j0 : j0 + L]

    per_degree: dict[int, float] = {}
    retained: list[tuple[TaskSpec, float]] = []
    n_evaluated = 0
    n_retained = 0
    for d in range(1, D_max + 1):
        acc = 0.0
        quiet = 0
        for base in range(1, max_delay + 1):
            if d == 1:
                tasks = [TaskSpec(((base, 1),))]
            else:
                tasks = _tasks_for_base(d, base, window, max_delay)
            hit = False
            for lo in range(0, len(tasks), _BLOCK_COLS):
                block = tasks[lo : lo + _BLOCK_COLS]
                Y = np.ones((L, len(block)))
                for col, task in enumerate(block):
                    for i, deg in task.pairs:
                        Y[:, col] *= column(i, deg)
                caps = ev.evaluate_block(Y)
                n_evaluated += len(block)
                for task, c in zip(block, caps):
                    if c >= cutoff:
                        acc += c
                        n_retained += 1
                        hit = True
                        if keep_tasks:
                            retained.append((task, float(c)))
            quiet = 0 if hit else quiet + 1
            if quiet >= stall_limit:
                break
        per_degree[d] = float(acc)
    return CapacityReport(
        per_degree=per_degree,
        cutoff=cutoff,
        n_evaluated=n_evaluated,
        n_retained=n_retained,
        tasks=retained,
        meta={
            "D_max": D_max,
            "max_delay": max_delay,
            "window": window,
            "stall_limit": stall_limit,
            "L": L,
            "rank": ev.rank,
        },
    )
