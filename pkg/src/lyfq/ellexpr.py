"""Parser for direction vectors such as ``"5pi/22, 1"`` or ``"1, sqrt(2)"``.

Grammar (whitespace ignored)::

    list    := expr ("," expr)*
    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary | primary)*     # juxtaposition multiplies
    unary   := ("+" | "-") unary | primary
    primary := NUMBER | "pi" | "sqrt" "(" expr ")" | "(" expr ")"
"""

from __future__ import annotations

import math
import re

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(pi|sqrt)|(.))")


class EllParseError(ValueError):
    def __init__(self, msg: str, text: str, col: int, line: int = 1):
        super().__init__(f"line {line}, column {col}: {msg}\n  {text}\n  {' ' * (col - 1)}^")
        self.line = line
        self.col = col


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            num, word, sym = m.groups()
            if num is None and word is None and sym is None:
                break  # trailing whitespace
            start = m.start(1) if num else m.start(2) if word else m.start(3)
            self.toks.append((("num", float(num)) if num else ("word", word) if word
                              else ("sym", sym), start + 1))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (("end", None), len(self.text) + 1)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, msg, col=None):
        raise EllParseError(msg, self.text, self.peek()[1] if col is None else col)

    def expect(self, sym):
        (kind, val), col = self.take()
        if kind != "sym" or val != sym:
            self.fail(f"expected '{sym}'", col)

    def parse_list(self):
        out = [self.expr()]
        while self.peek()[0] == ("sym", ","):
            self.take()
            out.append(self.expr())
        if self.peek()[0][0] != "end":
            self.fail(f"unexpected '{self.peek()[0][1]}'")
        return out

    def expr(self):
        v = self.term()
        while self.peek()[0] in (("sym", "+"), ("sym", "-")):
            op = self.take()[0][1]
            r = self.term()
            v = v + r if op == "+" else v - r
        return v

    def term(self):
        v = self.unary()
        while True:
            (kind, val), _ = self.peek()
            if kind == "sym" and val in "*/":
                self.take()
                r = self.unary()
                if val == "/":
                    if r == 0:
                        self.fail("division by zero")
                    v = v / r
                else:
                    v = v * r
            elif kind in ("num", "word") or (kind == "sym" and val == "("):
                v = v * self.primary()
            else:
                return v

    def unary(self):
        (kind, val), _ = self.peek()
        if kind == "sym" and val in "+-":
            self.take()
            r = self.unary()
            return -r if val == "-" else r
        return self.primary()

    def primary(self):
        (kind, val), col = self.take()
        if kind == "num":
            return val
        if kind == "word" and val == "pi":
            return math.pi
        if kind == "word" and val == "sqrt":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            if arg < 0:
                self.fail("sqrt of a negative number", col)
            return math.sqrt(arg)
        if kind == "sym" and val == "(":
            v = self.expr()
            self.expect(")")
            return v
        if kind == "end":
            self.fail("unexpected end of input", col)
        self.fail(f"unexpected '{val}'", col)


def parse_vector(text: str) -> list[float]:
    """Evaluate a comma-separated list of expressions in binary64."""
    if not text or not text.strip():
        raise EllParseError("empty expression", text or "", 1)
    return _Parser(text).parse_list()


def parse_ell(text: str) -> list[float]:
    v = parse_vector(text)
    if any(not x > 0 for x in v):
        raise EllParseError("direction entries must be strictly positive", text, 1)
    return v
