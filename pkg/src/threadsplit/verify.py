"""Differential verification of the transformation.

`run_sequential` on the original cfg is the oracle. Every obfuscated
configuration in a sweep (m values x partition seeds x schedules) must
reproduce its output and dynamic block sequence exactly, with zero
mutual-exclusion violations and a structurally valid partition.

The wait-set computation gets its own independent oracle here: a plain
node-at-a-time BFS (`oracle_first_inset_reachable`) that shares no code
with the frontier walk it checks.

`check_mutations` proves the harness actually detects broken handoff
protocols by injecting the three supported faults and requiring every
one to surface as a violation, a divergence, or a deadlock.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from . import ir, rng, textfmt
from .ir import BasicBlock, Branch, Cfg, Halt, Jump
from .obfuscate import check_bijection, get_immediate_successors, obfuscate
from .runtime import (
    COMPLETED,
    DEFAULT_STEP_BUDGET,
    RANDOM,
    ROUND_ROBIN,
    Mutation,
    Schedule,
    run_obfuscated,
    run_sequential,
)


def oracle_first_inset_reachable(bcur: int, bbset, cfg: Cfg,
                                 succs: list[set[int]] | None = None) -> set[int]:
    """Reference answer for the wait-set walk: the members of `bbset`
    reachable from `bcur` by a non-empty path whose intermediate nodes
    all lie outside `bbset`."""
    if succs is None:
        succs = ir.successor_map(cfg)
    inset = frozenset(bbset)
    result: set[int] = set()
    seen: set[int] = set()
    queue = deque(succs[bcur])
    while queue:
        v = queue.popleft()
        if v in inset:
            result.add(v)
            continue
        if v in seen:
            continue
        seen.add(v)
        queue.extend(succs[v])
    return result


def random_cfg(r: rng.Rng, max_n: int = 12, branch_density: float = 0.4) -> Cfg:
    """Random valid cfg with uniform size 1..max_n: one halt block, the
    rest jumps or branches with uniformly random targets. Targets are
    redrawn (keeping n fixed) until every block is reachable from the
    entry."""
    n = 1 + r.below(max_n)
    while True:
        exit_id = r.below(n)
        blocks = []
        for i in range(n):
            if i == exit_id:
                term: Jump | Branch | Halt = Halt()
            elif r.chance(branch_density):
                term = Branch("c", r.below(n), r.below(n))
            else:
                term = Jump(r.below(n))
            blocks.append(BasicBlock(i, f"b{i}", [], term))
        cfg = Cfg("random", blocks)
        if not ir.validate(cfg):
            return cfg


@dataclass
class Alg1Report:
    cfgs: int
    comparisons: int
    mismatches: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


@dataclass
class VerifyConfig:
    m_values: tuple[int, ...] = (1, 2, 3, 4)
    partition_seeds: int = 25
    schedule_seeds: int = 10
    corpus: tuple[str, ...] = ()  # paths of .cfg files for verify_files
    max_oracle_n: int = 12
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ValueError("m_values entries must be >= 1")
        for name in ("partition_seeds", "schedule_seeds", "max_oracle_n", "step_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class CaseResult:
    program: str
    m: int
    partition_seed: int
    schedule: str  # "structure", "round-robin", or "random:<seed>"
    ok: bool
    detail: str = ""
    status: str = ""
    flag_violations: int = 0


@dataclass
class VerifyReport:
    cases: list[CaseResult] = field(default_factory=list)
    alg1: Alg1Report | None = None

    @property
    def passed(self) -> int:
        return sum(1 for c in self.cases if c.ok)

    @property
    def failed(self) -> int:
        return len(self.cases) - self.passed

    @property
    def ok(self) -> bool:
        return self.failed == 0 and (self.alg1 is None or self.alg1.ok)

    def failures(self) -> list[CaseResult]:
        return [c for c in self.cases if not c.ok]

    def summary(self) -> str:
        lines = [f"equivalence cases: {self.passed} passed, {self.failed} failed"]
        for c in self.failures()[:20]:
            lines.append(
                f"  FAIL {c.program} m={c.m} pseed={c.partition_seed} "
                f"sched={c.schedule}: {c.detail}"
            )
        if self.alg1 is not None:
            verdict = "ok" if self.alg1.ok else f"{len(self.alg1.mismatches)} mismatches"
            lines.append(
                f"wait-set oracle: {self.alg1.comparisons} comparisons "
                f"over {self.alg1.cfgs} cfgs, {verdict}"
            )
        lines.append("verdict: " + ("PASS" if self.ok else "FAIL"))
        return "\n".join(lines)

    def merge(self, other: "VerifyReport") -> None:
        self.cases.extend(other.cases)
        if other.alg1 is not None:
            self.alg1 = other.alg1

    def to_json(self) -> str:
        doc = {
            "cases": [vars(c).copy() for c in self.cases],
            "passed": self.passed,
            "failed": self.failed,
            "ok": self.ok,
        }
        if self.alg1 is not None:
            doc["alg1"] = {
                "cfgs": self.alg1.cfgs,
                "comparisons": self.alg1.comparisons,
                "mismatches": self.alg1.mismatches,
            }
        return json.dumps(doc, indent=2) + "\n"


def check_algorithm1(trials: int = 1000, max_n: int = 12, seed: int = 2024,
                     subsets_per_cfg: int = 50) -> VerifyReport:
    """Compare the frontier walk against the BFS oracle over `trials`
    random cfgs, every block as the start x `subsets_per_cfg` random
    block subsets each."""
    r = rng.Rng(seed)
    comparisons = 0
    mismatches: list[dict] = []
    for _ in range(trials):
        cfg = random_cfg(r, max_n)
        succs = ir.successor_map(cfg)
        n = cfg.n
        for _ in range(subsets_per_cfg):
            mask = r.below(1 << n)
            subset = frozenset(b for b in range(n) if mask >> b & 1)
            for bcur in range(n):
                got = get_immediate_successors(bcur, subset, cfg, succs)
                want = oracle_first_inset_reachable(bcur, subset, cfg, succs)
                comparisons += 1
                if got != want:
                    mismatches.append({
                        "edges": [sorted(s) for s in succs],
                        "bcur": bcur,
                        "subset": sorted(subset),
                        "got": sorted(got),
                        "want": sorted(want),
                    })
    return VerifyReport(alg1=Alg1Report(trials, comparisons, mismatches))


def _first_divergence(got: list[int], want: list[int]) -> str:
    for i, (g, w) in enumerate(zip(got, want)):
        if g != w:
            return f"first divergence at step {i}: block {g}, expected {w}"
    return f"length {len(got)}, expected {len(want)}"


def check_equivalence(cfg: Cfg, config: VerifyConfig | None = None,
                      name: str | None = None,
                      inputs: dict[str, int] | None = None) -> VerifyReport:
    """Sweep one program: every m x partition seed gets a structure
    check plus round-robin and `schedule_seeds` random-schedule runs,
    each compared field-by-field against the sequential reference."""
    config = config or VerifyConfig()
    name = name or cfg.name
    ref = run_sequential(cfg, inputs)
    if ref.status != COMPLETED:
        raise ValueError(f"reference run of {name} did not complete: {ref.status}")
    ref_blocks = ref.block_sequence()
    ref_output = ref.output

    results: list[CaseResult] = []
    schedules = [Schedule(ROUND_ROBIN, 0, config.step_budget)]
    schedules += [Schedule(RANDOM, s, config.step_budget) for s in range(config.schedule_seeds)]
    for m in config.m_values:
        for pseed in range(config.partition_seeds):
            prog = obfuscate(cfg, m, pseed)
            issues = check_bijection(prog)
            results.append(CaseResult(
                name, m, pseed, "structure", not issues, "; ".join(issues)))
            for sched in schedules:
                label = sched.mode if sched.mode == ROUND_ROBIN else f"{sched.mode}:{sched.seed}"
                trace = run_obfuscated(prog, inputs, sched=sched)
                ok, detail = True, ""
                if trace.status != COMPLETED:
                    ok, detail = False, f"status {trace.status}, expected completed"
                elif trace.flag_violations:
                    ok, detail = False, f"{trace.flag_violations} mutual-exclusion violations"
                elif trace.output != ref_output:
                    ok, detail = False, ("output differs: "
                                         + _first_divergence(trace.output, ref_output))
                elif trace.block_sequence() != ref_blocks:
                    ok, detail = False, ("block sequence differs: "
                                         + _first_divergence(trace.block_sequence(), ref_blocks))
                results.append(CaseResult(
                    name, m, pseed, label, ok, detail, trace.status, trace.flag_violations))
    return VerifyReport(cases=results)


def check_mutations(cfg: Cfg, m: int = 3, seed: int = 7,
                    budget: int = 200_000) -> dict[str, dict]:
    """Inject each protocol fault into a scheduled run and report how it
    was detected. The reduced budget keeps induced deadlocks quick."""
    ref = run_sequential(cfg)
    prog = obfuscate(cfg, m, seed)
    report: dict[str, dict] = {}
    for mut in (Mutation.SKIP_CLEAR, Mutation.SKIP_RAISE, Mutation.WRONG_SUCCESSOR):
        trace = run_obfuscated(prog, sched=Schedule(step_budget=budget), mutation=mut)
        signals = []
        if trace.flag_violations:
            signals.append(f"{trace.flag_violations} mutual-exclusion violations")
        if trace.status != ref.status:
            signals.append(f"status {trace.status}")
        if trace.output != ref.output:
            signals.append("output divergence")
        elif trace.block_sequence() != ref.block_sequence():
            signals.append("block-sequence divergence")
        report[mut.value] = {"detected": bool(signals), "signals": signals}
    return report


def verify_files(named_cfgs: list[tuple[str, Cfg]] | None = None,
                 config: VerifyConfig | None = None,
                 alg1_trials: int = 100, seed: int = 2024) -> VerifyReport:
    """Full verification: wait-set oracle trials (unless alg1_trials is
    0) plus the differential sweep over a corpus of programs, given
    either pre-parsed as (name, cfg) pairs or as paths in config.corpus."""
    config = config or VerifyConfig()
    if named_cfgs is None:
        named_cfgs = [(Path(p).stem, textfmt.parse(Path(p).read_text()))
                      for p in config.corpus]
    report = VerifyReport()
    if alg1_trials > 0:
        report.merge(check_algorithm1(alg1_trials, config.max_oracle_n, seed))
    for name, cfg in named_cfgs:
        report.merge(check_equivalence(cfg, config, name))
    return report
