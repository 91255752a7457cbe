"""Toy integer IR: instructions, terminators, basic blocks, and CFGs.

Values are 64-bit signed integers with wrapping (two's-complement)
arithmetic. Division and modulo truncate toward zero, C style; a zero
divisor is a defined runtime trap, handled by the runtime module.

A `Cfg` is immutable by convention once built: nothing in this package
mutates one after construction, so it is safe to share across workers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

INT_BITS = 64
INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1

BINARY_OPS = ("+", "-", "*", "/", "%", "<", "<=", "==", "!=")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def wrap(value: int) -> int:
    """Reduce an integer into the signed 64-bit range, wrapping on overflow."""
    return ((value - INT_MIN) & ((1 << INT_BITS) - 1)) + INT_MIN


def is_var_name(name: str) -> bool:
    return bool(_NAME_RE.match(name))


@dataclass(frozen=True)
class ConstAssign:
    """dest = <64-bit signed literal>"""

    dest: str
    value: int


@dataclass(frozen=True)
class BinOp:
    """dest = lhs <op> rhs; comparison ops yield 0 or 1."""

    dest: str
    lhs: str
    op: str
    rhs: str


@dataclass(frozen=True)
class Print:
    """Append the value of `src` to the program output."""

    src: str


Instr = ConstAssign | BinOp | Print


@dataclass(frozen=True)
class Jump:
    target: int


@dataclass(frozen=True)
class Branch:
    cond: str
    iftrue: int
    iffalse: int


@dataclass(frozen=True)
class Halt:
    pass


Terminator = Jump | Branch | Halt


@dataclass
class BasicBlock:
    id: int
    label: str
    instrs: list[Instr] = field(default_factory=list)
    term: Terminator = field(default_factory=Halt)


@dataclass
class Cfg:
    """A single function's control-flow graph; block ids are dense, 0-based."""

    name: str
    blocks: list[BasicBlock]
    entry: int = 0

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def exit(self) -> int:
        """Id of the unique Halt block. Call validate() first on untrusted input."""
        halts = [b.id for b in self.blocks if isinstance(b.term, Halt)]
        if len(halts) != 1:
            raise ValueError(f"cfg {self.name!r} has {len(halts)} halt blocks, expected 1")
        return halts[0]


def successors(cfg: Cfg, b: int) -> set[int]:
    """Successor block ids of `b`: {target} for jump, {iftrue, iffalse} for
    branch (a set, so one element when both arms agree), empty for halt."""
    term = _block(cfg, b).term
    if isinstance(term, Jump):
        return {term.target}
    if isinstance(term, Branch):
        return {term.iftrue, term.iffalse}
    return set()


def predecessors(cfg: Cfg, b: int) -> set[int]:
    """Blocks whose terminator can transfer control to `b`."""
    _block(cfg, b)
    return {p.id for p in cfg.blocks if b in successors(cfg, p.id)}


def successor_map(cfg: Cfg) -> list[set[int]]:
    """All successor sets at once, indexed by block id."""
    return [successors(cfg, b.id) for b in cfg.blocks]


def _block(cfg: Cfg, b: int) -> BasicBlock:
    if not isinstance(b, int) or not 0 <= b < len(cfg.blocks):
        raise ValueError(f"no block with id {b!r} in cfg {cfg.name!r}")
    return cfg.blocks[b]


def validate(cfg: Cfg) -> list[str]:
    """Check structural well-formedness; returns a list of errors, empty if ok.

    Pure and idempotent. Predecessors of the entry block are allowed (a
    program may loop back to its first block).
    """
    errors: list[str] = []
    n = len(cfg.blocks)
    if n < 1:
        return ["cfg has no blocks"]

    labels: dict[str, int] = {}
    for i, blk in enumerate(cfg.blocks):
        if blk.id != i:
            errors.append(f"block at index {i} has id {blk.id} (ids must be dense)")
        if not blk.label or not is_var_name(blk.label):
            errors.append(f"block {i} has invalid label {blk.label!r}")
        elif blk.label in labels:
            errors.append(f"duplicate label {blk.label!r} (blocks {labels[blk.label]} and {i})")
        else:
            labels[blk.label] = i
        errors.extend(_check_instrs(blk))

    if not 0 <= cfg.entry < n:
        errors.append(f"entry id {cfg.entry} out of range")
        return errors

    halts = []
    for blk in cfg.blocks:
        term = blk.term
        if isinstance(term, Halt):
            halts.append(blk.id)
            continue
        targets = [term.target] if isinstance(term, Jump) else [term.iftrue, term.iffalse]
        for t in targets:
            if not 0 <= t < n:
                errors.append(f"dangling edge: block {blk.id} targets nonexistent block {t}")
        if isinstance(term, Branch) and not is_var_name(term.cond):
            errors.append(f"block {blk.id} branches on invalid variable {term.cond!r}")

    if not halts:
        errors.append("no exit: no block has a halt terminator")
    elif len(halts) > 1:
        errors.append(f"multiple exits: blocks {halts} all halt")

    if not errors:
        unreachable = sorted(set(range(n)) - _reachable(cfg))
        for b in unreachable:
            errors.append(f"block {b} ({cfg.blocks[b].label}) is unreachable from entry")
    return errors


def _check_instrs(blk: BasicBlock) -> list[str]:
    errors = []
    for instr in blk.instrs:
        if isinstance(instr, ConstAssign):
            if not is_var_name(instr.dest):
                errors.append(f"block {blk.id}: invalid variable name {instr.dest!r}")
            if not INT_MIN <= instr.value <= INT_MAX:
                errors.append(f"block {blk.id}: constant {instr.value} outside 64-bit range")
        elif isinstance(instr, BinOp):
            for name in (instr.dest, instr.lhs, instr.rhs):
                if not is_var_name(name):
                    errors.append(f"block {blk.id}: invalid variable name {name!r}")
            if instr.op not in BINARY_OPS:
                errors.append(f"block {blk.id}: unknown operator {instr.op!r}")
        elif isinstance(instr, Print):
            if not is_var_name(instr.src):
                errors.append(f"block {blk.id}: invalid variable name {instr.src!r}")
        else:
            errors.append(f"block {blk.id}: unknown instruction {instr!r}")
    return errors


def _reachable(cfg: Cfg) -> set[int]:
    seen = {cfg.entry}
    stack = [cfg.entry]
    while stack:
        for s in successors(cfg, stack.pop()):
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen
