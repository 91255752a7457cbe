import json

import pytest

from helpers import chain
from threadsplit.ir import INT_MAX, INT_MIN
from threadsplit.kernels import KERNELS, kernel_text
from threadsplit.obfuscate import Partition, build_thread_cfg, obfuscate
from threadsplit.runtime import (
    COMPLETED,
    DEADLOCK,
    TRAPPED,
    GuardTable,
    Mutation,
    ObfuscatedProgram,
    Schedule,
    benchmark,
    run_obfuscated,
    run_sequential,
    trace_to_json,
)
from threadsplit.textfmt import parse


def kernel(name):
    return parse(kernel_text(name))


def program(src: str):
    return parse(src)


def test_single_halt_block():
    trace = run_sequential(chain(1))
    assert trace.status == COMPLETED
    assert trace.records == [(0, "seq", 0)]
    assert trace.output == []


def test_fib_kernel_prints_55():
    a, b = 0, 1
    for _ in range(10):
        a, b = b, a + b
    assert a == 55
    trace = run_sequential(kernel("fib"))
    assert trace.status == COMPLETED
    assert trace.output == [a]


def test_prime_kernel_matches_trial_division():
    def is_prime(k):
        if k < 2:
            return False
        d = 2
        while d * d <= k:
            if k % d == 0:
                return False
            d += 1
        return True

    trace = run_sequential(kernel("prime"))
    assert trace.status == COMPLETED
    pairs = list(zip(trace.output[::2], trace.output[1::2]))
    assert pairs == [(k, int(is_prime(k))) for k in range(21)]


def test_evens_kernel():
    trace = run_sequential(kernel("evens"))
    assert trace.output == [k for k in range(21) if k % 2 == 0]


def test_undefined_variable_reads_zero():
    trace = run_sequential(program("func f {\n  block a:\n    print ghost\n    halt\n}\n"))
    assert trace.output == [0]


def test_arithmetic_wraps_64_bit():
    src = (
        "func f {\n"
        "  block a:\n"
        f"    big = {INT_MAX}\n"
        "    one = 1\n"
        "    s = big + one\n"
        "    print s\n"
        f"    low = {INT_MIN}\n"
        "    negone = -1\n"
        "    q = low / negone\n"
        "    print q\n"
        "    p = low * negone\n"
        "    print p\n"
        "    halt\n"
        "}\n"
    )
    trace = run_sequential(program(src))
    assert trace.status == COMPLETED
    assert trace.output == [INT_MIN, INT_MIN, INT_MIN]


def test_division_truncates_toward_zero():
    src = (
        "func f {\n"
        "  block a:\n"
        "    a = -7\n"
        "    b = 2\n"
        "    q = a / b\n"
        "    r = a % b\n"
        "    print q\n"
        "    print r\n"
        "    halt\n"
        "}\n"
    )
    trace = run_sequential(program(src))
    assert trace.output == [-3, -1]


def test_comparisons_yield_01():
    src = (
        "func f {\n"
        "  block a:\n"
        "    x = 3\n"
        "    y = 5\n"
        "    lt = x < y\n"
        "    le = y <= x\n"
        "    eq = x == x\n"
        "    ne = x != x\n"
        "    print lt\n"
        "    print le\n"
        "    print eq\n"
        "    print ne\n"
        "    halt\n"
        "}\n"
    )
    assert run_sequential(program(src)).output == [1, 0, 1, 0]


DIV_ZERO = (
    "func f {\n"
    "  block a:\n"
    "    x = 7\n"
    "    print x\n"
    "    q = x / zero\n"
    "    print q\n"
    "    halt\n"
    "}\n"
)


def test_division_by_zero_traps_sequential():
    trace = run_sequential(program(DIV_ZERO))
    assert trace.status == TRAPPED
    assert trace.trap_reason == "division by zero"
    assert trace.output == [7]  # prints before the trap survive


def test_modulo_by_zero_traps():
    src = "func f {\n  block a:\n    x = 7\n    r = x % zero\n    halt\n}\n"
    trace = run_sequential(program(src))
    assert trace.status == TRAPPED
    assert trace.trap_reason == "modulo by zero"


def test_trap_in_scheduled_mode_releases_all_workers():
    prog = obfuscate(program(DIV_ZERO), 3, seed=1)
    trace = run_obfuscated(prog)
    assert trace.status == TRAPPED
    assert trace.trap_reason == "division by zero"
    assert trace.output == [7]


def test_trap_in_concurrent_mode():
    prog = obfuscate(program(DIV_ZERO), 2, seed=1)
    trace = run_obfuscated(prog, concurrent=True)
    assert trace.status == TRAPPED
    assert trace.output == [7]


def test_sequential_budget_exhaustion_is_deadlock():
    trace = run_sequential(kernel("fib"), max_steps=3)
    assert trace.status == DEADLOCK


def test_scheduled_budget_exhaustion_is_deadlock():
    prog = obfuscate(kernel("fib"), 2, seed=0)
    trace = run_obfuscated(prog, sched=Schedule(step_budget=5))
    assert trace.status == DEADLOCK


def test_m1_replays_sequential_exactly():
    for name in KERNELS:
        cfg = kernel(name)
        ref = run_sequential(cfg)
        trace = run_obfuscated(obfuscate(cfg, 1, seed=0))
        assert trace.status == COMPLETED
        assert trace.output == ref.output
        assert trace.block_sequence() == ref.block_sequence()
        assert trace.flag_violations == 0


def test_prime_m4_seed42_round_robin_matches_sequential():
    cfg = kernel("prime")
    ref = run_sequential(cfg)
    prog = obfuscate(cfg, 4, seed=42)
    trace = run_obfuscated(prog, sched=Schedule("round-robin"))
    assert trace.status == COMPLETED
    assert trace.output == ref.output
    assert trace.block_sequence() == ref.block_sequence()
    assert trace.flag_violations == 0


def test_schedule_choice_never_changes_behavior():
    cfg = kernel("prime")
    ref = run_sequential(cfg)
    prog = obfuscate(cfg, 3, seed=9)
    schedules = [Schedule("round-robin")] + [Schedule("random", s) for s in range(10)]
    for sched in schedules:
        trace = run_obfuscated(prog, sched=sched)
        assert trace.status == COMPLETED
        assert trace.output == ref.output
        assert trace.block_sequence() == ref.block_sequence()


def test_random_schedule_deterministic_per_seed():
    prog = obfuscate(kernel("evens"), 3, seed=2)
    a = run_obfuscated(prog, sched=Schedule("random", 4))
    b = run_obfuscated(prog, sched=Schedule("random", 4))
    assert a.records == b.records


def test_empty_partition_worker_contributes_nothing():
    cfg = chain(3)
    part = Partition(2, {0: 0, 1: 0, 2: 0}, seed=0)
    threads = [build_thread_cfg(cfg, part, t) for t in range(2)]
    prog = ObfuscatedProgram(cfg, part, threads, obfuscate(cfg, 2, 0).guard_layout)
    trace = run_obfuscated(prog)
    assert trace.status == COMPLETED
    assert all(worker == 0 for _, worker, _ in trace.records)


def test_workers_recorded_by_owner():
    cfg = kernel("evens")
    prog = obfuscate(cfg, 3, seed=4)
    owner = {b: t for t, tcfg in enumerate(prog.threads) for b in tcfg.owned_blocks}
    trace = run_obfuscated(prog)
    assert trace.status == COMPLETED
    for _, worker, block in trace.records:
        assert worker == owner[block]
    steps = [s for s, _, _ in trace.records]
    assert steps == sorted(steps)


def test_concurrent_matches_sequential_output():
    for name in KERNELS:
        cfg = kernel(name)
        ref = run_sequential(cfg)
        prog = obfuscate(cfg, 2, seed=8)
        trace = run_obfuscated(prog, concurrent=True)
        assert trace.status == COMPLETED
        assert trace.output == ref.output


def test_concurrent_rejects_mutations():
    prog = obfuscate(kernel("fib"), 2, seed=0)
    with pytest.raises(ValueError):
        run_obfuscated(prog, concurrent=True, mutation=Mutation.SKIP_RAISE)


def test_mutation_skip_raise_deadlocks():
    prog = obfuscate(kernel("prime"), 3, seed=7)
    trace = run_obfuscated(prog, sched=Schedule(step_budget=100_000),
                           mutation=Mutation.SKIP_RAISE)
    assert trace.status == DEADLOCK


def test_mutation_skip_clear_violates_mutual_exclusion():
    prog = obfuscate(kernel("prime"), 3, seed=7)
    trace = run_obfuscated(prog, sched=Schedule(step_budget=100_000),
                           mutation=Mutation.SKIP_CLEAR)
    assert trace.flag_violations > 0


def test_mutation_wrong_successor_detected():
    cfg = kernel("prime")
    ref = run_sequential(cfg)
    prog = obfuscate(cfg, 3, seed=7)
    trace = run_obfuscated(prog, sched=Schedule(step_budget=100_000),
                           mutation=Mutation.WRONG_SUCCESSOR)
    diverged = (trace.status != ref.status or trace.output != ref.output
                or trace.block_sequence() != ref.block_sequence())
    assert diverged


def test_guard_table_layout_and_flags():
    prog = obfuscate(kernel("evens"), 2, seed=0, stride=16)
    table = GuardTable(prog.guard_layout)
    assert len(table.cells) == (prog.source.n + 1) * 16
    table.set_flag(3)
    assert table.get(3) == 1
    assert table.cells[3 * 16] == 1
    assert table.raised_data_flags() == [3]
    table.clear_flag(3)
    assert table.raised_data_flags() == []


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule("fifo")
    with pytest.raises(ValueError):
        Schedule(step_budget=0)


def test_trace_json_shape():
    trace = run_sequential(chain(2))
    doc = json.loads(trace_to_json(trace))
    assert doc["status"] == COMPLETED
    assert doc["output"] == []
    assert doc["records"] == [
        {"step": 0, "thread": "seq", "block": 0},
        {"step": 1, "thread": "seq", "block": 1},
    ]
    trapped = run_sequential(program(DIV_ZERO))
    doc2 = json.loads(trace_to_json(trapped))
    assert doc2["trap_reason"] == "division by zero"


def test_benchmark_carries_all_samples():
    cfg = kernel("fib")
    prog = obfuscate(cfg, 1, seed=0)
    report = benchmark(cfg, prog, repeats=5, concurrent=False)
    assert report.repeats == 5
    assert len(report.seq_samples) == 5
    assert len(report.obf_samples) == 5
    assert report.slowdown >= 1.0
    assert report.expected_band == "10x-100x"
    assert report.mode == "scheduled"


def test_benchmark_rejects_bad_repeats():
    cfg = kernel("fib")
    with pytest.raises(ValueError):
        benchmark(cfg, obfuscate(cfg, 1, 0), repeats=0)
