"""Minimal DOT grammar checker for the subset this package emits.

Accepts: `digraph "name" { ... }` containing node statements
(`id [attrs];`) and edge statements (`id -> id [attrs];`), where attrs
is a bracketed comma-separated list of key=value pairs with bare or
double-quoted values. Raises ValueError on anything else.
"""

import re

_HEADER_RE = re.compile(r'^digraph "([^"]*)" \{$')
_EDGE_RE = re.compile(r"^(\w+) -> (\w+)(?: (\[.*\]))?;$")
_NODE_RE = re.compile(r"^(\w+)(?: (\[.*\]))?;$")
_ATTRS_RE = re.compile(
    r'^\[\s*\w+\s*=\s*(?:"[^"]*"|\w+)(?:\s*,\s*\w+\s*=\s*(?:"[^"]*"|\w+))*\s*\]$'
)


def _check_attrs(attrs: str | None) -> str:
    if attrs is None:
        return ""
    if not _ATTRS_RE.match(attrs):
        raise ValueError(f"bad attribute list: {attrs!r}")
    return attrs


def parse_dot(text: str) -> tuple[str, dict[str, str], list[tuple[str, str, str]]]:
    """Returns (graph name, nodes id->attrs, edges (src, dst, attrs))."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty DOT document")
    header = _HEADER_RE.match(lines[0])
    if not header:
        raise ValueError(f"bad DOT header: {lines[0]!r}")
    if lines[-1] != "}":
        raise ValueError("missing closing brace")

    nodes: dict[str, str] = {}
    edges: list[tuple[str, str, str]] = []
    for ln in lines[1:-1]:
        edge = _EDGE_RE.match(ln)
        if edge:
            src, dst, attrs = edge.groups()
            edges.append((src, dst, _check_attrs(attrs)))
            continue
        node = _NODE_RE.match(ln)
        if node:
            ident, attrs = node.groups()
            if ident in nodes:
                raise ValueError(f"duplicate node {ident!r}")
            nodes[ident] = _check_attrs(attrs)
            continue
        raise ValueError(f"unparsable DOT statement: {ln!r}")
    for src, dst, _ in edges:
        if src not in nodes or dst not in nodes:
            raise ValueError(f"edge {src} -> {dst} references an undeclared node")
    return header.group(1), nodes, edges
