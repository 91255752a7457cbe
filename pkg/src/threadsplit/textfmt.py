"""Textual format for CFGs: parser, pretty-printer, and DOT renderings
of original and per-thread graphs.

Grammar (one function per file):

    func NAME {
      block LABEL:
        INSTR
        ...
        TERM
      ...
    }

    INSTR ::= ID = NUM | ID = ID OP ID | print ID
    TERM  ::= jump LABEL | br ID, LABEL, LABEL | halt

`#` starts a line comment. Whitespace is insignificant except that
statements inside a block are separated by newlines. Block ids are
assigned in textual order starting at 0; the first block is the entry.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ir
from .ir import BasicBlock, BinOp, Branch, Cfg, ConstAssign, Halt, Instr, Jump, Print
from .obfuscate import ThreadCfg

KEYWORDS = {"func", "block", "print", "jump", "br", "halt"}

_TWO_CHAR = ("<=", "==", "!=")
_ONE_CHAR = "=+-*/%<,:{}"


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class _Token:
    kind: str  # ident, num, newline, eof, or the punctuation text itself
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        span = SourceSpan(line, col)
        if c == "\n":
            tokens.append(_Token("newline", "\n", span))
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in KEYWORDS else "ident"
            tokens.append(_Token(kind, word, span))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("num", text[i:j], span))
            col += j - i
            i = j
            continue
        if text[i : i + 2] in _TWO_CHAR:
            tokens.append(_Token(text[i : i + 2], text[i : i + 2], span))
            i += 2
            col += 2
            continue
        if c in _ONE_CHAR:
            tokens.append(_Token(c, c, span))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", span)
    tokens.append(_Token("eof", "", SourceSpan(line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def skip_newlines(self) -> None:
        while self.peek().kind == "newline":
            self.next()

    def expect(self, kind: str, what: str | None = None) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            want = what or f"'{kind}'"
            raise ParseError(f"expected {want}, got {_describe(tok)}", tok.span)
        return tok

    def end_statement(self) -> None:
        # A statement ends at a newline, or just before `block` / `}`.
        tok = self.peek()
        if tok.kind == "newline":
            self.next()
        elif tok.kind not in ("block", "}", "eof"):
            raise ParseError(f"expected end of statement, got {_describe(tok)}", tok.span)


def _describe(tok: _Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    if tok.kind == "newline":
        return "end of line"
    return f"'{tok.text}'"


def parse(text: str) -> Cfg:
    """Parse a program into a validated Cfg; raises ParseError on bad input."""
    p = _Parser(_tokenize(text))
    p.skip_newlines()
    p.expect("func")
    name = p.expect("ident", "function name").text
    p.expect("{")
    p.skip_newlines()

    blocks: list[BasicBlock] = []
    labels: dict[str, int] = {}
    # Terminator targets are labels until the whole function is read.
    pending: list[tuple[BasicBlock, str | Branch, _Token, _Token | None]] = []

    while p.peek().kind != "}":
        tok = p.peek()
        if tok.kind != "block":
            raise ParseError(f"expected 'block' or '}}', got {_describe(tok)}", tok.span)
        p.next()
        label_tok = p.expect("ident", "block label")
        if label_tok.text in labels:
            raise ParseError(f"duplicate block label {label_tok.text!r}", label_tok.span)
        p.expect(":")
        p.skip_newlines()
        blk = BasicBlock(id=len(blocks), label=label_tok.text)
        labels[blk.label] = blk.id
        _parse_statements(p, blk, pending)
        blocks.append(blk)
        p.skip_newlines()

    p.next()  # the closing brace
    p.skip_newlines()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input after '}}': {_describe(tok)}", tok.span)

    for blk, term, tok1, tok2 in pending:
        blk.term = _resolve(term, labels, tok1, tok2)

    cfg = Cfg(name=name, blocks=blocks)
    errors = ir.validate(cfg)
    if errors:
        raise ParseError("; ".join(errors), SourceSpan(1, 1))
    return cfg


def _parse_statements(p: _Parser, blk: BasicBlock, pending: list) -> None:
    """Parse `(INSTR NEWLINE)* TERM` into blk; targets resolved later."""
    while True:
        p.skip_newlines()
        tok = p.peek()
        if tok.kind in ("block", "}", "eof"):
            raise ParseError(f"block {blk.label!r} has no terminator", tok.span)
        if tok.kind == "halt":
            p.next()
            blk.term = Halt()
            p.end_statement()
            return
        if tok.kind == "jump":
            p.next()
            target = p.expect("ident", "target label")
            pending.append((blk, target.text, target, None))
            p.end_statement()
            return
        if tok.kind == "br":
            p.next()
            cond = p.expect("ident", "condition variable")
            p.expect(",")
            t_tok = p.expect("ident", "target label")
            p.expect(",")
            f_tok = p.expect("ident", "target label")
            pending.append((blk, Branch(cond.text, -1, -1), t_tok, f_tok))
            p.end_statement()
            return
        blk.instrs.append(_parse_instr(p))
        p.end_statement()


def _parse_instr(p: _Parser) -> Instr:
    tok = p.peek()
    if tok.kind == "print":
        p.next()
        src = p.expect("ident", "variable name")
        return Print(src.text)
    if tok.kind != "ident":
        raise ParseError(f"expected a statement, got {_describe(tok)}", tok.span)
    dest = p.next()
    p.expect("=")
    rhs = p.next()
    if rhs.kind == "num":
        value = int(rhs.text)
        if not ir.INT_MIN <= value <= ir.INT_MAX:
            raise ParseError(f"integer literal {rhs.text} outside 64-bit signed range", rhs.span)
        return ConstAssign(dest.text, value)
    if rhs.kind == "ident":
        op = p.next()
        if op.kind not in ir.BINARY_OPS:
            raise ParseError(f"expected an operator, got {_describe(op)}", op.span)
        rhs2 = p.expect("ident", "variable name")
        return BinOp(dest.text, rhs.text, op.kind, rhs2.text)
    raise ParseError(f"expected a number or variable, got {_describe(rhs)}", rhs.span)


def _resolve(term, labels: dict[str, int], tok1: _Token, tok2: _Token | None):
    if isinstance(term, str):
        if term not in labels:
            raise ParseError(f"unknown block label {term!r}", tok1.span)
        return Jump(labels[term])
    if tok1.text not in labels:
        raise ParseError(f"unknown block label {tok1.text!r}", tok1.span)
    if tok2.text not in labels:
        raise ParseError(f"unknown block label {tok2.text!r}", tok2.span)
    return Branch(term.cond, labels[tok1.text], labels[tok2.text])


def format_cfg(cfg: Cfg) -> str:
    """Pretty-print a Cfg in the grammar above; parse(format_cfg(c)) == c."""
    lines = [f"func {cfg.name} {{"]
    for blk in cfg.blocks:
        lines.append(f"  block {blk.label}:")
        for instr in blk.instrs:
            lines.append(f"    {format_instr(instr)}")
        lines.append(f"    {_format_term(cfg, blk.term)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_instr(instr: Instr) -> str:
    if isinstance(instr, ConstAssign):
        return f"{instr.dest} = {instr.value}"
    if isinstance(instr, BinOp):
        return f"{instr.dest} = {instr.lhs} {instr.op} {instr.rhs}"
    return f"print {instr.src}"


def _format_term(cfg: Cfg, term) -> str:
    if isinstance(term, Jump):
        return f"jump {cfg.blocks[term.target].label}"
    if isinstance(term, Branch):
        t, f = cfg.blocks[term.iftrue].label, cfg.blocks[term.iffalse].label
        return f"br {term.cond}, {t}, {f}"
    return "halt"

def emit_dot_cfg(cfg: Cfg) -> str:
    """One node per block labeled `id: label`; one edge per successor
    relation, branch edges annotated T/F."""
    lines = [f'digraph "{cfg.name}" {{']
    for blk in cfg.blocks:
        lines.append(f'  b{blk.id} [shape=box, label="{blk.id}: {blk.label}"];')
    for blk in cfg.blocks:
        for succ in sorted(ir.successors(cfg, blk.id)):
            note = _branch_note(blk.term, succ)
            lines.append(f"  b{blk.id} -> b{succ}{note};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _branch_note(term, succ: int) -> str:
    if not isinstance(term, Branch):
        return ""
    if term.iftrue == term.iffalse:
        return ' [label="T/F"]'
    return ' [label="T"]' if succ == term.iftrue else ' [label="F"]'


def emit_dot_thread(tcfg: ThreadCfg, cfg: Cfg | None = None) -> str:
    """Render one generated thread: Entry/Exit, the shared Wait/Switch
    pairs (wait sets shown in the Wait labels, DONE included), the owned
    blocks, and the handoff edges between them."""
    wait_sets = tcfg.wait_sets()
    wait_id = {ws: i for i, ws in enumerate(wait_sets)}

    lines = [f'digraph "thread{tcfg.thread_index}" {{']
    lines.append('  entry [shape=oval, label="Entry"];')
    lines.append('  exit [shape=oval, label="Exit"];')
    for i, ws in enumerate(wait_sets):
        flags = ", ".join(str(b) for b in ws.sorted_flags())
        flags = f"{flags}, DONE" if flags else "DONE"
        lines.append(f'  wait{i} [shape=diamond, label="Wait {{{flags}}}"];')
        if ws.flags:
            lines.append(f'  switch{i} [shape=trapezium, label="Switch"];')
    for b in sorted(tcfg.owned_blocks):
        label = f"{b}: {cfg.blocks[b].label}" if cfg is not None else str(b)
        lines.append(f'  b{b} [shape=box, label="{label}"];')

    lines.append(f"  entry -> wait{wait_id[tcfg.entry_wait]};")
    for i, ws in enumerate(wait_sets):
        if not ws.flags:
            lines.append(f"  wait{i} -> exit;")
            continue
        lines.append(f"  wait{i} -> switch{i};")
        for b in ws.sorted_flags():
            lines.append(f"  switch{i} -> b{b};")
        lines.append(f'  switch{i} -> exit [label="DONE"];')
    for b in sorted(tcfg.owned_blocks):
        ws = tcfg.per_block_wait[b]
        if ws.flags:
            lines.append(f"  b{b} -> wait{wait_id[ws]};")
        else:
            # Nothing of this thread is reachable from b, so b is its last word.
            lines.append(f"  b{b} -> exit;")
    lines.append("}")
    return "\n".join(lines) + "\n"
