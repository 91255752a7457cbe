import pytest

from helpers import chain, diamond, two_loop
from threadsplit import ir
from threadsplit.ir import (
    BasicBlock,
    BinOp,
    Branch,
    Cfg,
    ConstAssign,
    Halt,
    Jump,
    Print,
    validate,
)


def test_wrap_two_complement():
    assert ir.wrap(0) == 0
    assert ir.wrap(ir.INT_MAX) == ir.INT_MAX
    assert ir.wrap(ir.INT_MAX + 1) == ir.INT_MIN
    assert ir.wrap(ir.INT_MIN - 1) == ir.INT_MAX
    assert ir.wrap(1 << 64) == 0
    assert ir.wrap(-(1 << 64)) == 0


def test_successors_of_halt_is_empty():
    cfg = chain(3)
    assert ir.successors(cfg, 2) == set()


def test_successors_of_jump_is_singleton():
    cfg = chain(3)
    assert ir.successors(cfg, 0) == {1}


def test_successors_of_branch_same_target_collapses():
    cfg = Cfg("b", [
        BasicBlock(0, "a", [], Branch("c", 1, 1)),
        BasicBlock(1, "b", [], Halt()),
    ])
    assert ir.successors(cfg, 0) == {1}


def test_successors_of_branch_two_targets():
    cfg = diamond()
    assert ir.successors(cfg, 0) == {1, 2}


def test_successor_map_matches_pointwise():
    cfg = diamond()
    assert ir.successor_map(cfg) == [ir.successors(cfg, b) for b in range(cfg.n)]


def test_predecessors_chain():
    cfg = chain(3)
    assert ir.predecessors(cfg, 0) == set()
    assert ir.predecessors(cfg, 1) == {0}
    assert ir.predecessors(cfg, 2) == {1}


def test_predecessors_loop_head_sees_forward_and_back_edges():
    cfg = Cfg("loop", [
        BasicBlock(0, "pre", [], Jump(1)),
        BasicBlock(1, "head", [], Branch("c", 2, 3)),
        BasicBlock(2, "body", [], Jump(1)),
        BasicBlock(3, "end", [], Halt()),
    ])
    assert ir.predecessors(cfg, 1) == {0, 2}


def test_exit_property():
    assert chain(3).exit == 2
    with pytest.raises(ValueError):
        two_loop().exit


def test_validate_minimal_single_block():
    cfg = Cfg("tiny", [BasicBlock(0, "only", [], Halt())])
    assert validate(cfg) == []


def test_validate_dangling_edge():
    cfg = Cfg("bad", [BasicBlock(0, "a", [], Jump(7))])
    errors = validate(cfg)
    assert any("dangling" in e for e in errors)


def test_validate_multiple_exits():
    cfg = Cfg("bad", [
        BasicBlock(0, "a", [], Branch("c", 1, 2)),
        BasicBlock(1, "b", [], Halt()),
        BasicBlock(2, "c", [], Halt()),
    ])
    errors = validate(cfg)
    assert any("multiple exits" in e for e in errors)


def test_validate_no_exit():
    errors = validate(two_loop())
    assert any("no exit" in e for e in errors)


def test_validate_unreachable_block():
    cfg = Cfg("bad", [
        BasicBlock(0, "a", [], Halt()),
        BasicBlock(1, "b", [], Jump(0)),
    ])
    errors = validate(cfg)
    assert any("unreachable" in e for e in errors)


def test_validate_duplicate_label():
    cfg = Cfg("bad", [
        BasicBlock(0, "same", [], Jump(1)),
        BasicBlock(1, "same", [], Halt()),
    ])
    errors = validate(cfg)
    assert any("label" in e for e in errors)


def test_validate_const_out_of_range():
    cfg = Cfg("bad", [
        BasicBlock(0, "a", [ConstAssign("x", 1 << 63)], Halt()),
    ])
    errors = validate(cfg)
    assert any("64-bit" in e for e in errors)


def test_validate_unknown_operator():
    cfg = Cfg("bad", [
        BasicBlock(0, "a", [BinOp("x", "a", "@", "b")], Halt()),
    ])
    errors = validate(cfg)
    assert any("operator" in e for e in errors)


def test_validate_bad_variable_name():
    cfg = Cfg("bad", [
        BasicBlock(0, "a", [Print("7up")], Halt()),
    ])
    errors = validate(cfg)
    assert errors


def test_validate_non_dense_ids():
    cfg = Cfg("bad", [
        BasicBlock(1, "a", [], Halt()),
    ])
    errors = validate(cfg)
    assert errors


def test_binary_ops_frozen_list():
    assert ir.BINARY_OPS == ("+", "-", "*", "/", "%", "<", "<=", "==", "!=")


def test_is_var_name():
    assert ir.is_var_name("x")
    assert ir.is_var_name("loop_cond")
    assert ir.is_var_name("_a1")
    assert not ir.is_var_name("7up")
    assert not ir.is_var_name("")
    assert not ir.is_var_name("a-b")
