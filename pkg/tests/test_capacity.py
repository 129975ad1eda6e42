"""Capacity machinery: Legendre targets, projection forms, enumeration."""

import itertools
import math

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from delayrc.capacity import (
    CapacityEvaluator,
    CapacityReport,
    TaskSpec,
    _tasks_for_base,
    capacity,
    capacity_dambre,
    enumerate_tasks,
    legendre_normalized,
    legendre_table,
    memory_capacity,
    orthonormal_basis,
    target_from_task,
)
from delayrc.reservoir import StateMatrix, uniform_inputs


def test_legendre_low_degrees():
    u = np.linspace(-1.0, 1.0, 11)
    np.testing.assert_allclose(legendre_normalized(0, u), np.ones(11))
    np.testing.assert_allclose(legendre_normalized(1, u), math.sqrt(3) * u)
    np.testing.assert_allclose(
        legendre_normalized(2, u), math.sqrt(5) * 0.5 * (3 * u * u - 1))
    assert legendre_normalized(1, 0.5) == pytest.approx(math.sqrt(3) * 0.5)


def test_legendre_against_numpy():
    u = np.random.default_rng(0).uniform(-1, 1, 200)
    for d in range(9):
        coeffs = np.zeros(d + 1)
        coeffs[d] = 1.0
        expected = math.sqrt(2 * d + 1) * npleg.legval(u, coeffs)
        np.testing.assert_allclose(legendre_normalized(d, u), expected,
                                   rtol=1e-12, atol=1e-12)


def test_legendre_orthonormal_under_uniform_measure():
    # <P_d P_e> = delta_de for u ~ U[-1, 1], checked by quadrature
    x = np.linspace(-1.0, 1.0, 20001)
    table = legendre_table(x, 5)
    for d in range(6):
        for e in range(d, 6):
            inner = np.trapezoid(table[d] * table[e], x) / 2.0
            assert inner == pytest.approx(1.0 if d == e else 0.0, abs=1e-6)


def test_legendre_domain_and_table():
    with pytest.raises(ValueError):
        legendre_normalized(2, np.array([1.5]))
    with pytest.raises(ValueError):
        legendre_normalized(-1, np.array([0.0]))
    u = np.random.default_rng(1).uniform(-1, 1, 50)
    table = legendre_table(u, 4)
    assert table.shape == (5, 50)
    for d in range(5):
        np.testing.assert_array_equal(table[d], legendre_normalized(d, u))


def test_task_spec():
    t = TaskSpec(((3, 2), (1, 1)))
    assert t.pairs == ((1, 1), (3, 2))  # sorted by delay
    assert t.degree == 3
    assert t.max_delay == 3
    assert str(t) == "P1(u[-1])*P2(u[-3])"
    with pytest.raises(ValueError):
        TaskSpec(())
    with pytest.raises(ValueError):
        TaskSpec(((0, 1),))
    with pytest.raises(ValueError):
        TaskSpec(((1, 0),))
    with pytest.raises(ValueError):
        TaskSpec(((2, 1), (2, 2)))  # duplicate delay


def test_target_indexing():
    # delay 1 is the input driving the row's own cycle: row j -> u[offset+j]
    u = np.linspace(-0.9, 0.9, 30)
    offset, length = 10, 15
    y1 = target_from_task(TaskSpec(((1, 1),)), u, offset, length)
    np.testing.assert_allclose(y1, math.sqrt(3) * u[offset:offset + length])
    y3 = target_from_task(TaskSpec(((3, 1),)), u, offset, length)
    np.testing.assert_allclose(y3, math.sqrt(3) * u[offset - 2:offset - 2 + length])
    prod = target_from_task(TaskSpec(((1, 1), (3, 2))), u, offset, length)
    np.testing.assert_allclose(prod, y1 * legendre_normalized(
        2, u[offset - 2:offset - 2 + length]))


def test_target_history_bounds():
    u = np.zeros(30)
    with pytest.raises(ValueError):
        target_from_task(TaskSpec(((12, 1),)), u, 10, 5)  # needs offset >= 11
    with pytest.raises(ValueError):
        target_from_task(TaskSpec(((1, 1),)), u, 10, 25)  # runs past the end


def test_capacity_forms_agree():
    rng = np.random.default_rng(7)
    for _ in range(20):
        L = rng.integers(20, 200)
        n = rng.integers(2, 15)
        S = rng.normal(size=(L, n))
        y = rng.normal(size=L)
        assert capacity(S, y) == pytest.approx(capacity_dambre(S, y),
                                               abs=1e-10)


def test_capacity_span_and_orthogonality():
    rng = np.random.default_rng(8)
    S = rng.normal(size=(300, 4))
    w = rng.normal(size=4)
    assert capacity(S, S @ w) == pytest.approx(1.0, abs=1e-12)
    # a fresh random target is nearly orthogonal to a 4-dim subspace
    assert capacity(S, rng.normal(size=300)) < 0.05


def test_capacity_affine_invariance():
    rng = np.random.default_rng(9)
    S = rng.normal(size=(200, 3))
    y = rng.normal(size=200)
    base = capacity(S, y)
    assert capacity(2.5 * S + 1.0, y) == pytest.approx(base, abs=1e-12)
    assert capacity(S, 3.0 * y - 2.0) == pytest.approx(base, abs=1e-12)


def test_capacity_zero_variance_target():
    S = np.random.default_rng(10).normal(size=(20, 2))
    with pytest.raises(ValueError):
        capacity(S, np.ones(20))


def test_orthonormal_basis_rank():
    rng = np.random.default_rng(11)
    col = rng.normal(size=(40, 1))
    S = np.hstack([col, col, rng.normal(size=(40, 2))])
    Q = orthonormal_basis(S)
    assert Q.shape == (40, 3)  # duplicated column drops the rank
    np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-12)
    assert orthonormal_basis(np.zeros((5, 2))).shape == (5, 0)


def test_evaluator_block_matches_single():
    rng = np.random.default_rng(12)
    S = rng.normal(size=(150, 6))
    ev = CapacityEvaluator(S)
    Y = rng.normal(size=(150, 9))
    block = ev.evaluate_block(Y)
    for j in range(9):
        assert block[j] == pytest.approx(capacity(S, Y[:, j]), abs=1e-12)
        assert ev.evaluate(Y[:, j]) == pytest.approx(block[j], abs=1e-14)
    with pytest.raises(ValueError):
        ev.evaluate_block(np.zeros((10, 2)))


def test_enumerate_degree_one():
    tasks = list(enumerate_tasks(1, max_delay=7))
    assert tasks == [TaskSpec(((i, 1),)) for i in range(1, 8)]


def _brute_force_tasks(d, max_delay, window):
    found = set()
    delays_all = range(1, max_delay + 1)
    for m in range(1, d + 1):
        for delays in itertools.combinations(delays_all, m):
            if max(delays) - min(delays) > window:
                continue
            for degs in itertools.product(range(1, d + 1), repeat=m):
                if sum(degs) == d:
                    found.add(TaskSpec(tuple(zip(delays, degs))))
    return found


@pytest.mark.parametrize("d,window,max_delay", [(2, 3, 8), (3, 2, 6), (4, 3, 5)])
def test_enumerate_matches_brute_force(d, window, max_delay):
    got = list(enumerate_tasks(d, max_delay=max_delay, window=window))
    assert len(got) == len(set(got))  # no duplicates
    assert set(got) == _brute_force_tasks(d, max_delay, window)


def test_tasks_for_base_count():
    # per base: sum over m of C(d-1, m-1) * C(avail, m-1) delay/degree splits
    d, base, window, max_delay = 4, 3, 5, 20
    tasks = _tasks_for_base(d, base, window, max_delay)
    avail = window  # delays base+1 .. base+window all inside max_delay
    expected = sum(
        math.comb(d - 1, m - 1) * math.comb(avail, m - 1)
        for m in range(1, d + 1)
    )
    assert len(tasks) == expected
    assert all(t.degree == d and min(i for i, _ in t.pairs) == base
               for t in tasks)


def test_enumeration_stall():
    seen = []

    def never_hits(task):
        seen.append(task)
        return 0.0

    list(enumerate_tasks(1, max_delay=100, evaluate=never_hits,
                         stall_limit=6, cutoff=0.01))
    assert len(seen) == 6  # stops after stall_limit quiet bases

    # a late hit resets the counter
    def hits_at_5(task):
        return 1.0 if task.max_delay == 5 else 0.0

    tasks = list(enumerate_tasks(1, max_delay=100, evaluate=hits_at_5,
                                 stall_limit=6, cutoff=0.01))
    assert len(tasks) == 11  # 4 quiet + hit at 5 + 6 more quiet


def test_memory_capacity_delay_line():
    u = uniform_inputs(4000, 0)
    offset, N_V = 50, 5
    L = len(u) - offset
    S = np.column_stack([u.values[offset - n: offset - n + L]
                         for n in range(N_V)])
    sm = StateMatrix(S, T=1.0, N_V=N_V, offset=offset)
    report = memory_capacity(sm, u, D_max=3, cutoff=0.01, max_delay=20,
                             window=5, stall_limit=5, keep_tasks=True)
    assert report.mc(1) == pytest.approx(N_V, abs=0.05)
    assert report.mc(2) < 0.1
    assert report.mc(3) < 0.1
    assert report.total <= N_V + 0.05
    retained_delays = {t.max_delay for t, _ in report.tasks if t.degree == 1}
    assert retained_delays == set(range(1, N_V + 1))
    assert report.meta["rank"] == N_V
    assert report.meta["L"] == L


def test_memory_capacity_nonlinear_column():
    # a reservoir holding P2 of the last input has pure degree-2 capacity
    u = uniform_inputs(3000, 1)
    offset = 20
    L = len(u) - offset
    col = legendre_normalized(2, u.values[offset:offset + L])
    sm = StateMatrix(col[:, None], T=1.0, N_V=1, offset=offset)
    report = memory_capacity(sm, u, D_max=2, cutoff=0.01, max_delay=10,
                             window=3, stall_limit=10)
    assert report.mc(2) == pytest.approx(1.0, abs=0.02)
    assert report.mc(1) < 0.05


def test_memory_capacity_guards():
    u = uniform_inputs(100, 2)
    S = np.random.default_rng(0).normal(size=(80, 3))
    with pytest.raises(ValueError):
        memory_capacity(S, u, offset=None)  # bare array needs offset
    with pytest.raises(ValueError):
        memory_capacity(S, u, offset=20, max_delay=30)  # beyond history
    with pytest.raises(ValueError):
        memory_capacity(S, u, offset=30, D_max=0, max_delay=5)
    with pytest.raises(ValueError):
        memory_capacity(S, uniform_inputs(50, 2), offset=20, max_delay=5)


def test_capacity_report_json_round_trip():
    report = CapacityReport(
        per_degree={1: 4.5, 2: 1.25},
        cutoff=0.003,
        n_evaluated=321,
        n_retained=7,
        tasks=[(TaskSpec(((1, 1),)), 0.99), (TaskSpec(((2, 1), (3, 1))), 0.5)],
        meta={"rank": 10, "L": 1000},
    )
    back = CapacityReport.from_json(report.to_json())
    assert back.per_degree == report.per_degree
    assert back.total == pytest.approx(report.total)
    assert back.cutoff == report.cutoff
    assert back.n_evaluated == report.n_evaluated
    assert back.tasks == report.tasks
    assert back.meta == report.meta
    with pytest.raises(ValueError):
        CapacityReport.from_json('{"schema": 2}')
