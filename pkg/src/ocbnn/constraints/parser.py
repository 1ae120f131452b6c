"""Parser and pretty-printer for the constraint expression language.

One declaration per line, ``#`` starts a comment. Grammar:

    decl     := ("positive" | "negative") ":" box ":" body
    box      := bound ("," bound)*
    bound    := real "<=" "x[" int "]" "<=" real
    negative body := ineq ("," ineq)*          # one conjunction group per line
    ineq     := poly cmp poly ; cmp := "<=" | "<" | ">=" | ">"
    positive body := comp ("|" comp)*          # regression mixture
                   | "class" "=" int ("," int)*  # classification
    comp     := "y[" int "]" "=" poly "~" "gauss(" real ")" ["@" real]
    poly     := signed sum of real-coefficient monomials built with "*" and "^"

Inequalities are normalized to ``f <= 0`` form; strict and non-strict
comparisons compile identically. Comma-separated inequalities on one
``negative`` line form a single conjunction group; separate lines form the
union of groups.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ConfigError, ConstraintSyntaxError
from .expr import PolyExpr
from .regions import MixtureComponent, NegativeRegion, PositiveRegion, Region

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<symbol><=|>=|<|>|=|:|,|\||@|~|\(|\)|\[|\]|\+|-|\*|\^))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "name", "symbol", "end"
    text: str
    line: int
    column: int


def _tokenize_line(text: str, line_no: int) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == match.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            column = pos + (len(text[pos:]) - len(stripped)) + 1
            raise ConstraintSyntaxError(
                f"unrecognized character {stripped[0]!r}", line_no, column
            )
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), line_no, match.start(kind) + 1))
        pos = match.end()
    tokens.append(Token("end", "", line_no, len(text) + 1))
    return tokens


class _LineParser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def error(self, message: str, expected=(), at: Token | None = None):
        tok = at or self.peek()
        found = tok.text if tok.kind != "end" else "end of line"
        raise ConstraintSyntaxError(message, tok.line, tok.column, expected, found)

    def expect_symbol(self, symbol: str) -> Token:
        tok = self.peek()
        if tok.kind != "symbol" or tok.text != symbol:
            self.error(f"expected {symbol!r}", expected=(repr(symbol),))
        return self.advance()

    def at_symbol(self, *symbols: str) -> bool:
        tok = self.peek()
        return tok.kind == "symbol" and tok.text in symbols

    # --- terminals ------------------------------------------------------

    def parse_number(self) -> float:
        sign = 1.0
        while self.at_symbol("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        tok = self.peek()
        if tok.kind != "number":
            self.error("expected a number", expected=("number",))
        self.advance()
        return sign * float(tok.text)

    def parse_int(self, what: str) -> int:
        tok = self.peek()
        if tok.kind != "number" or not re.fullmatch(r"\d+", tok.text):
            self.error(f"expected an integer {what}", expected=("integer",))
        self.advance()
        return int(tok.text)

    def parse_indexed_var(self, allowed: str) -> tuple[str, int]:
        tok = self.peek()
        if tok.kind != "name":
            self.error("expected a variable", expected=tuple(f"{a}[...]" for a in allowed))
        if tok.text not in ("x", "y"):
            self.error(f"unknown variable {tok.text!r}", expected=tuple(f"{a}[...]" for a in allowed))
        if tok.text not in allowed:
            self.error(
                f"variable {tok.text!r} not allowed here",
                expected=tuple(f"{a}[...]" for a in allowed),
            )
        self.advance()
        self.expect_symbol("[")
        index = self.parse_int("index")
        self.expect_symbol("]")
        return tok.text, index

    # --- polynomials ----------------------------------------------------

    def parse_poly(self, allowed_vars: str = "xy") -> PolyExpr:
        terms = []
        sign = 1.0
        while self.at_symbol("+", "-"):
            if self.advance().text == "-":
                sign = -sign
        while True:
            terms.append(self._parse_term(sign, allowed_vars))
            if not self.at_symbol("+", "-"):
                break
            sign = 1.0
            while self.at_symbol("+", "-"):
                if self.advance().text == "-":
                    sign = -sign
        return PolyExpr(tuple(terms))

    def _parse_term(self, sign: float, allowed_vars: str):
        coeff = sign
        mono = []
        while True:
            tok = self.peek()
            if tok.kind == "number":
                self.advance()
                coeff *= float(tok.text)
            elif tok.kind == "name":
                kind, index = self.parse_indexed_var(allowed_vars)
                exponent = 1
                if self.at_symbol("^"):
                    self.advance()
                    exponent = self.parse_int("exponent")
                mono.append((kind, index, exponent))
            else:
                self.error("expected a number or variable", expected=("number", "variable"))
            if not self.at_symbol("*"):
                return coeff, tuple(mono)
            self.advance()

    # --- declaration pieces ----------------------------------------------

    def parse_box(self):
        bounds = []
        while True:
            low = self.parse_number()
            self.expect_symbol("<=")
            _, dim = self.parse_indexed_var("x")
            self.expect_symbol("<=")
            high = self.parse_number()
            bounds.append((dim, low, high))
            if not self.at_symbol(","):
                break
            self.advance()
        return tuple(bounds)

    def parse_negative_body(self) -> tuple[PolyExpr, ...]:
        inequalities = []
        while True:
            lhs = self.parse_poly()
            tok = self.peek()
            if not self.at_symbol("<=", "<", ">=", ">"):
                self.error("expected a comparison", expected=("'<='", "'<'", "'>='", "'>'"))
            cmp = self.advance().text
            rhs = self.parse_poly()
            # normalize to f <= 0; strict comparisons compile identically
            inequalities.append(lhs - rhs if cmp in ("<=", "<") else rhs - lhs)
            if not self.at_symbol(","):
                break
            self.advance()
        return tuple(inequalities)

    def parse_positive_body(self):
        tok = self.peek()
        if tok.kind == "name" and tok.text == "class":
            self.advance()
            self.expect_symbol("=")
            classes = [self.parse_int("class id")]
            while self.at_symbol(","):
                self.advance()
                classes.append(self.parse_int("class id"))
            return None, (), frozenset(classes)
        components = []
        output_index = None
        while True:
            start = self.peek()
            _, index = self.parse_indexed_var("y")
            if output_index is None:
                output_index = index
            elif index != output_index:
                self.error(
                    "all mixture components must target the same output column", at=start
                )
            self.expect_symbol("=")
            target = self.parse_poly(allowed_vars="x")
            self.expect_symbol("~")
            name = self.peek()
            if name.kind != "name" or name.text != "gauss":
                self.error("expected 'gauss'", expected=("'gauss'",))
            self.advance()
            self.expect_symbol("(")
            sigma = self.parse_number()
            self.expect_symbol(")")
            weight = None
            if self.at_symbol("@"):
                self.advance()
                weight = self.parse_number()
            components.append((target, sigma, weight))
            if not self.at_symbol("|"):
                break
            self.advance()
        return output_index, tuple(components), frozenset()


def _build_positive(box, output_index, raw_components, allowed) -> PositiveRegion:
    if allowed:
        return PositiveRegion(input_box=box, allowed_classes=allowed)
    weights = [w for _, _, w in raw_components]
    given = [w for w in weights if w is not None]
    if given and len(given) != len(weights):
        raise ConfigError("give weights for all components or none")
    if not given:
        weights = [1.0 / len(raw_components)] * len(raw_components)
    total = sum(weights)
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"mixture weights sum to {total!r}, expected 1")
    components = tuple(
        MixtureComponent(target=t, sigma=s, weight=w)
        for (t, s, _), w in zip(raw_components, weights)
    )
    return PositiveRegion(input_box=box, output_index=output_index, components=components)


def parse_constraints(text: str) -> list[Region]:
    """Parse constraint declarations, one per line; returns regions in order."""
    regions: list[Region] = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        if not line.strip():
            continue
        parser = _LineParser(_tokenize_line(line, line_no))
        head = parser.peek()
        if head.kind != "name" or head.text not in ("positive", "negative"):
            parser.error(
                "declarations start with 'positive' or 'negative'",
                expected=("'positive'", "'negative'"),
            )
        parser.advance()
        parser.expect_symbol(":")
        box = parser.parse_box()
        parser.expect_symbol(":")
        try:
            if head.text == "negative":
                group = parser.parse_negative_body()
                region: Region = NegativeRegion(input_box=box, inequality_groups=(group,))
            else:
                output_index, comps, allowed = parser.parse_positive_body()
                region = _build_positive(box, output_index, comps, allowed)
        except ConfigError as exc:
            if isinstance(exc, ConstraintSyntaxError):
                raise
            raise ConfigError(f"line {line_no}: {exc}") from None
        tail = parser.peek()
        if tail.kind != "end":
            parser.error("unexpected trailing input", expected=("end of line",))
        regions.append(region)
    if not regions:
        raise ConfigError("constraint text contains no declarations")
    return regions


def _pretty_box(box) -> str:
    return ", ".join(f"{lo!r} <= x[{dim}] <= {hi!r}" for dim, lo, hi in box)


def pretty_region(region: Region) -> str:
    if isinstance(region, NegativeRegion):
        lines = []
        for group in region.inequality_groups:
            body = ", ".join(f"{f.pretty()} <= 0" for f in group)
            lines.append(f"negative: {_pretty_box(region.input_box)} : {body}")
        return "\n".join(lines)
    if region.is_classification:
        body = "class = " + ", ".join(str(c) for c in sorted(region.allowed_classes))
    else:
        body = " | ".join(
            f"y[{region.output_index}] = {c.target.pretty()} ~ gauss({c.sigma!r}) @ {c.weight!r}"
            for c in region.components
        )
    return f"positive: {_pretty_box(region.input_box)} : {body}"


def pretty_constraints(regions) -> str:
    return "\n".join(pretty_region(r) for r in regions) + "\n"
