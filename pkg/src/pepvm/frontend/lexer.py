"""Tokenizer for PEP source text."""

from __future__ import annotations

import re
from typing import NamedTuple


class PepError(Exception):
    """Parse or validation error.

    ``kind`` is one of ``syntax``, ``missing-init-state``, ``unknown-machine``,
    ``unknown-variable``, ``unknown-state``, ``reserved-state-name``,
    ``duplicate``.
    """

    def __init__(self, kind: str, message: str, line: int = 0, col: int = 0):
        self.kind = kind
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{kind}: {message}")


class Token(NamedTuple):
    kind: str  # IDENT, STRING, OP, EOF
    text: str
    line: int
    col: int


_SPEC = [
    ("WS", r"[ \t\r]+"),
    ("NL", r"\n"),
    ("COMMENT", r"//[^\n]*"),
    ("STRING", r'"[A-Za-z0-9_]*"'),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP", r"=>|[{}();,.=<>]"),
]
_MASTER = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _SPEC))


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _MASTER.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise PepError("syntax", f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "NL":
            line += 1
            line_start = m.end()
        elif kind == "STRING":
            tokens.append(Token("STRING", text[1:-1], line, col))
        elif kind in ("IDENT", "OP"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens
