"""Small hand-built CFGs shared across test modules."""

from threadsplit.ir import BasicBlock, Branch, Cfg, Halt, Jump


def chain(k: int, name: str = "chain") -> Cfg:
    """Linear cfg: 0 -> 1 -> ... -> k-1, last block halts."""
    blocks = [BasicBlock(i, f"n{i}", [], Jump(i + 1)) for i in range(k - 1)]
    blocks.append(BasicBlock(k - 1, f"n{k - 1}", [], Halt()))
    return Cfg(name, blocks)


def two_loop() -> Cfg:
    """0 <-> 1 with no exit; for wait-set walks only, never execution."""
    return Cfg("loop2", [
        BasicBlock(0, "a", [], Jump(1)),
        BasicBlock(1, "b", [], Jump(0)),
    ])


def diamond() -> Cfg:
    """0 branches to {1, 2}, both rejoin at 3, which halts."""
    return Cfg("diamond", [
        BasicBlock(0, "top", [], Branch("c", 1, 2)),
        BasicBlock(1, "left", [], Jump(3)),
        BasicBlock(2, "right", [], Jump(3)),
        BasicBlock(3, "bottom", [], Halt()),
    ])
