"""Minimal reader for constraint files, sufficient for rendering.

This package deliberately does not depend on the inference library; it
re-reads the same line-based constraint grammar and keeps just what a figure
needs: region kind, the input box, and evaluable expressions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<symbol><=|>=|<|>|=|:|,|\||@|~|\(|\)|\[|\]|\+|-|\*|\^))"
)


class ConstraintFileError(ValueError):
    pass


@dataclass(frozen=True)
class Poly:
    """Sum of (coefficient, ((kind, index, exponent), ...)) terms."""

    terms: tuple

    def __call__(self, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if y is not None:
            y = np.atleast_2d(np.asarray(y, dtype=float))
        total = np.zeros(x.shape[0])
        for coeff, mono in self.terms:
            part = np.full(x.shape[0], coeff)
            for kind, index, exponent in mono:
                col = x[:, index] if kind == "x" else y[:, index]
                part = part * col**exponent
            total += part
        return total


@dataclass(frozen=True)
class RegionShape:
    kind: str  # "negative" | "positive" | "positive_class"
    box: tuple  # ((dim, lo, hi), ...)
    inequalities: tuple[Poly, ...] = ()  # negative: conjunction, f <= 0
    components: tuple = ()  # positive regression: (target Poly, sigma, weight)
    output_index: int = 0
    allowed_classes: tuple[int, ...] = ()


class _Cursor:
    def __init__(self, tokens, line_no):
        self.tokens = tokens
        self.pos = 0
        self.line_no = line_no

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else ("end", "")

    def next(self):
        tok = self.peek()
        self.pos += 1 if tok[0] != "end" else 0
        return tok

    def expect(self, text):
        kind, got = self.next()
        if got != text:
            raise ConstraintFileError(
                f"line {self.line_no}: expected {text!r}, found {got or 'end of line'!r}"
            )


def _tokenize(line, line_no):
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if not m or m.end() == pos:
            rest = line[pos:].strip()
            if not rest:
                break
            raise ConstraintFileError(f"line {line_no}: cannot read {rest[:10]!r}")
        tokens.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
    return tokens


def _number(cur: _Cursor) -> float:
    sign = 1.0
    while cur.peek() == ("symbol", "+") or cur.peek() == ("symbol", "-"):
        if cur.next()[1] == "-":
            sign = -sign
    kind, text = cur.next()
    if kind != "number":
        raise ConstraintFileError(f"line {cur.line_no}: expected a number, found {text!r}")
    return sign * float(text)


def _indexed(cur: _Cursor) -> tuple[str, int]:
    kind, name = cur.next()
    if kind != "name" or name not in ("x", "y"):
        raise ConstraintFileError(f"line {cur.line_no}: expected x[...] or y[...], found {name!r}")
    cur.expect("[")
    _, idx = cur.next()
    cur.expect("]")
    return name, int(idx)


def _poly(cur: _Cursor) -> Poly:
    terms = []
    sign = 1.0
    while cur.peek()[1] in ("+", "-"):
        if cur.next()[1] == "-":
            sign = -sign
    while True:
        coeff, mono = sign, []
        while True:
            kind, text = cur.peek()
            if kind == "number":
                cur.next()
                coeff *= float(text)
            elif kind == "name":
                var, idx = _indexed(cur)
                exp = 1
                if cur.peek() == ("symbol", "^"):
                    cur.next()
                    exp = int(cur.next()[1])
                mono.append((var, idx, exp))
            else:
                raise ConstraintFileError(f"line {cur.line_no}: expected a term, found {text!r}")
            if cur.peek() != ("symbol", "*"):
                break
            cur.next()
        terms.append((coeff, tuple(mono)))
        if cur.peek()[1] not in ("+", "-"):
            break
        sign = 1.0
        while cur.peek()[1] in ("+", "-"):
            if cur.next()[1] == "-":
                sign = -sign
    return Poly(tuple(terms))


def read_constraint_file(text: str) -> list[RegionShape]:
    regions = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        cur = _Cursor(_tokenize(line, line_no), line_no)
        _, head = cur.next()
        if head not in ("positive", "negative"):
            raise ConstraintFileError(f"line {line_no}: unknown declaration {head!r}")
        cur.expect(":")
        box = []
        while True:
            lo = _number(cur)
            cur.expect("<=")
            _, dim = _indexed(cur)
            cur.expect("<=")
            hi = _number(cur)
            box.append((dim, lo, hi))
            if cur.peek() != ("symbol", ","):
                break
            cur.next()
        cur.expect(":")
        if head == "negative":
            fs = []
            while True:
                lhs = _poly(cur)
                _, cmp_text = cur.next()
                if cmp_text not in ("<=", "<", ">=", ">"):
                    raise ConstraintFileError(f"line {line_no}: expected a comparison")
                rhs = _poly(cur)
                if cmp_text in ("<=", "<"):
                    fs.append(Poly(lhs.terms + tuple((-c, m) for c, m in rhs.terms)))
                else:
                    fs.append(Poly(rhs.terms + tuple((-c, m) for c, m in lhs.terms)))
                if cur.peek() != ("symbol", ","):
                    break
                cur.next()
            regions.append(RegionShape("negative", tuple(box), inequalities=tuple(fs)))
        elif cur.peek() == ("name", "class"):
            cur.next()
            cur.expect("=")
            classes = [int(cur.next()[1])]
            while cur.peek() == ("symbol", ","):
                cur.next()
                classes.append(int(cur.next()[1]))
            regions.append(RegionShape("positive_class", tuple(box), allowed_classes=tuple(classes)))
        else:
            comps = []
            output_index = 0
            while True:
                _, output_index = _indexed(cur)
                cur.expect("=")
                target = _poly(cur)
                cur.expect("~")
                cur.next()  # gauss
                cur.expect("(")
                sigma = _number(cur)
                cur.expect(")")
                weight = 1.0
                if cur.peek() == ("symbol", "@"):
                    cur.next()
                    weight = _number(cur)
                comps.append((target, sigma, weight))
                if cur.peek() != ("symbol", "|"):
                    break
                cur.next()
            regions.append(
                RegionShape(
                    "positive", tuple(box), components=tuple(comps), output_index=output_index
                )
            )
    if not regions:
        raise ConstraintFileError("constraint file contains no declarations")
    return regions


def negative_mask(region: RegionShape, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Membership of (x, y) pairs in the forbidden set (all inequalities hold)."""
    X = np.asarray(x, dtype=float).reshape(-1, 1)
    Y = np.asarray(y, dtype=float).reshape(-1, 1)
    mask = np.ones(X.shape[0], dtype=bool)
    for dim, lo, hi in region.box:
        if dim == 0:
            mask &= (X[:, 0] >= lo) & (X[:, 0] <= hi)
    for f in region.inequalities:
        mask &= f(X, Y) <= 0.0
    return mask
