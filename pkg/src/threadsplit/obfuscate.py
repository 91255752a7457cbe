"""The thread-splitting transformation.

Takes a single-threaded CFG and a thread count m, assigns every basic
block to one of m threads uniformly at random (so there are exactly m^n
possible assignments for n blocks), and builds one guarded CFG per
thread. Each thread spins in a Wait node until the flag of one of its
blocks is raised, dispatches to that block through a Switch node,
executes it, raises the flag of the block's dynamic successor (owned by
whichever thread), and returns to waiting. A dedicated DONE flag, raised
when the original exit block runs, releases every thread.

The wait set attached to a block b is the set of in-partition blocks
reachable from b along paths whose intermediate blocks all lie outside
the partition: the first blocks of this thread that can possibly run
next. Thread entry nodes wait on the analogous set computed from the
program entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import ir, rng
from .ir import Cfg

DEFAULT_STRIDE = 64

FORMAT_VERSION = 1


@dataclass
class Partition:
    """Assignment of every block id to one thread index in [0, m)."""

    m: int
    assign: dict[int, int]
    seed: int

    def owned(self, t: int) -> frozenset[int]:
        return frozenset(b for b, ti in self.assign.items() if ti == t)


@dataclass(frozen=True)
class WaitSet:
    """Block flags one Wait node spins on. Every wait additionally watches
    the DONE flag; that is implicit and not part of `flags`."""

    flags: frozenset[int]

    @property
    def includes_done(self) -> bool:
        return True

    def sorted_flags(self) -> tuple[int, ...]:
        return tuple(sorted(self.flags))


@dataclass
class ThreadCfg:
    """One generated thread: its owned blocks plus synthetic structure.

    Structure: Entry feeds the Wait node for `entry_wait`. Each distinct
    non-empty wait set gets one shared Wait+Switch pair; the Switch
    dispatches to whichever waited block's flag is up, or to Exit on
    DONE. After executing block b, control moves to the Wait node for
    `per_block_wait[b]`; a block whose wait set is empty can never see
    another owned block run, so it proceeds straight to Exit.
    """

    thread_index: int
    owned_blocks: frozenset[int]
    entry_wait: WaitSet
    per_block_wait: dict[int, WaitSet]

    def wait_sets(self) -> list[WaitSet]:
        """Distinct wait sets needing a Wait node, in first-use order:
        the entry wait (always, even when empty), then non-empty
        per-block waits in block-id order."""
        seen: list[WaitSet] = [self.entry_wait]
        for b in sorted(self.per_block_wait):
            ws = self.per_block_wait[b]
            if ws.flags and ws not in seen:
                seen.append(ws)
        return seen


@dataclass(frozen=True)
class GuardLayout:
    """Flag table layout: one 0/1 cell per block plus DONE, each padded to
    `stride` bytes so concurrent spinners don't share cache lines."""

    n: int
    stride: int = DEFAULT_STRIDE

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @property
    def slots(self) -> int:
        return self.n + 1

    @property
    def done_index(self) -> int:
        return self.n


@dataclass
class ObfuscatedProgram:
    source: Cfg
    partition: Partition
    threads: list[ThreadCfg]
    guard_layout: GuardLayout

    @property
    def m(self) -> int:
        return self.partition.m


def partition_blocks(cfg: Cfg, m: int, seed: int) -> Partition:
    """Assign each block a thread index drawn uniformly and independently
    from [0, m), in block-id order, from a splitmix64 stream seeded with
    `seed`. Deterministic: same (cfg, m, seed) gives the same partition."""
    if m < 1:
        raise ValueError(f"thread count must be >= 1, got {m}")
    r = rng.Rng(seed)
    return Partition(m=m, assign={b: r.below(m) for b in range(cfg.n)}, seed=seed)


def get_immediate_successors(bcur: int, bbset, cfg: Cfg, succs=None) -> set[int]:
    """Blocks of `bbset` reachable from `bcur` along paths whose
    intermediate blocks all lie outside `bbset`.

    Frontier-set worklist: repeatedly take the successors I of the
    current frontier, bank I's in-set part, and keep only the
    not-yet-seen out-of-set part as the next frontier. `seenBefore`
    caps the frontier, so this terminates on cyclic graphs too.

    `bcur` itself need not belong to `bbset`. `succs` may carry a
    precomputed ir.successor_map(cfg) to amortize repeated calls.
    """
    if not 0 <= bcur < cfg.n:
        raise ValueError(f"no block with id {bcur!r} in cfg {cfg.name!r}")
    if succs is None:
        succs = ir.successor_map(cfg)
    return _walk_frontier({bcur}, frozenset(bbset), succs)


def _walk_frontier(bb: set[int], bbset: frozenset[int], succs) -> set[int]:
    result: set[int] = set()
    seen_before: set[int] = set()
    while bb:
        frontier: set[int] = set()
        for x in bb:
            frontier |= succs[x]
        result |= frontier & bbset
        may_next = frontier - bbset
        bb = may_next - seen_before
        seen_before |= may_next
    return result


def initial_wait_set(bbset, cfg: Cfg, succs=None) -> set[int]:
    """First in-set blocks reachable from the program entry (the entry
    itself if owned): what a thread must wait on before anything of its
    partition has run. Computed as the successor walk applied to a
    virtual pre-entry node whose sole successor is cfg.entry."""
    if succs is None:
        succs = ir.successor_map(cfg)
    pre_entry = len(succs)
    return _walk_frontier({pre_entry}, frozenset(bbset), list(succs) + [{cfg.entry}])


def build_thread_cfg(cfg: Cfg, partition: Partition, t: int, succs=None) -> ThreadCfg:
    if not 0 <= t < partition.m:
        raise ValueError(f"thread index {t} out of range for m={partition.m}")
    if succs is None:
        succs = ir.successor_map(cfg)
    owned = partition.owned(t)
    entry_wait = WaitSet(frozenset(initial_wait_set(owned, cfg, succs)))
    per_block = {
        b: WaitSet(frozenset(get_immediate_successors(b, owned, cfg, succs)))
        for b in sorted(owned)
    }
    return ThreadCfg(t, owned, entry_wait, per_block)


def obfuscate(cfg: Cfg, m: int, seed: int, stride: int = DEFAULT_STRIDE) -> ObfuscatedProgram:
    """Partition the blocks and build all m thread CFGs plus the guard
    layout. Pure function of its arguments."""
    errors = ir.validate(cfg)
    if errors:
        raise ValueError(f"invalid cfg {cfg.name!r}: " + "; ".join(errors))
    partition = partition_blocks(cfg, m, seed)
    succs = ir.successor_map(cfg)
    threads = [build_thread_cfg(cfg, partition, t, succs) for t in range(m)]
    return ObfuscatedProgram(cfg, partition, threads, GuardLayout(cfg.n, stride))


def count_combinations(m: int, n: int) -> int:
    """Number of distinct block-to-thread assignments: exactly m**n."""
    if m < 1:
        raise ValueError(f"thread count must be >= 1, got {m}")
    if n < 0:
        raise ValueError(f"block count must be >= 0, got {n}")
    return m**n


def check_bijection(prog: ObfuscatedProgram) -> list[str]:
    """Independent structural check that the threads' owned sets form a
    partition of all block ids: each id in exactly one owned set."""
    errors = []
    counts = {b: 0 for b in range(prog.source.n)}
    for tcfg in prog.threads:
        for b in tcfg.owned_blocks:
            if b not in counts:
                errors.append(f"thread {tcfg.thread_index} owns unknown block {b}")
            else:
                counts[b] += 1
    for b, c in counts.items():
        if c != 1:
            errors.append(f"block {b} owned by {c} threads, expected exactly 1")
    return errors


def program_to_json(prog: ObfuscatedProgram) -> str:
    """Stable, human-readable serialization of an obfuscated program."""
    doc = {
        "version": FORMAT_VERSION,
        "source_name": prog.source.name,
        "m": prog.partition.m,
        "n": prog.source.n,
        "seed": prog.partition.seed,
        "stride": prog.guard_layout.stride,
        "prng": rng.ALGORITHM,
        "assign": [prog.partition.assign[b] for b in range(prog.source.n)],
        "threads": [
            {
                "owned": sorted(tcfg.owned_blocks),
                "entry_wait": list(tcfg.entry_wait.sorted_flags()),
                "per_block_wait": {
                    str(b): list(ws.sorted_flags())
                    for b, ws in sorted(tcfg.per_block_wait.items())
                },
            }
            for tcfg in prog.threads
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def program_from_json(text: str, cfg: Cfg) -> ObfuscatedProgram:
    """Rebuild an ObfuscatedProgram against its source cfg.

    The stored assignment is authoritative (it may have been hand-tuned);
    wait sets are recomputed from it and cross-checked against the stored
    ones so corruption or a cfg/file mismatch is detected.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"not a valid program file: {e}") from e
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported program file version {doc.get('version')!r}")
    if doc["source_name"] != cfg.name:
        raise ValueError(
            f"program file is for function {doc['source_name']!r}, not {cfg.name!r}"
        )
    if doc["n"] != cfg.n:
        raise ValueError(f"program file expects {doc['n']} blocks, cfg has {cfg.n}")
    m = doc["m"]
    assign = {b: int(t) for b, t in enumerate(doc["assign"])}
    if len(assign) != cfg.n or any(not 0 <= t < m for t in assign.values()):
        raise ValueError("malformed block assignment")

    partition = Partition(m=m, assign=assign, seed=doc["seed"])
    succs = ir.successor_map(cfg)
    threads = [build_thread_cfg(cfg, partition, t, succs) for t in range(m)]
    for tcfg, stored in zip(threads, doc["threads"]):
        rebuilt = {
            "owned": sorted(tcfg.owned_blocks),
            "entry_wait": list(tcfg.entry_wait.sorted_flags()),
            "per_block_wait": {
                str(b): list(ws.sorted_flags())
                for b, ws in sorted(tcfg.per_block_wait.items())
            },
        }
        if rebuilt != stored:
            raise ValueError(
                f"thread {tcfg.thread_index} in program file does not match the "
                f"given cfg (stale or edited file?)"
            )
    return ObfuscatedProgram(cfg, partition, threads, GuardLayout(cfg.n, doc["stride"]))
