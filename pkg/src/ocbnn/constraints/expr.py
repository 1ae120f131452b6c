"""Polynomial expressions over input variables x[i] and output variables y[j]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

# A monomial is a sorted tuple of (kind, index, exponent) with kind in {"x", "y"}
# and exponent >= 1; the empty tuple is the constant monomial.
Monomial = tuple[tuple[str, int, int], ...]


def _canonical(terms) -> tuple[tuple[float, Monomial], ...]:
    merged: dict[Monomial, float] = {}
    for coeff, mono in terms:
        factors: dict[tuple[str, int], int] = {}
        for kind, index, exponent in mono:
            if kind not in ("x", "y"):
                raise ConfigError(f"unknown variable kind {kind!r}")
            if index < 0 or exponent < 0:
                raise ConfigError("variable indices and exponents must be non-negative")
            if exponent:
                factors[(kind, index)] = factors.get((kind, index), 0) + exponent
        key: Monomial = tuple(
            (kind, index, exp) for (kind, index), exp in sorted(factors.items())
        )
        merged[key] = merged.get(key, 0.0) + float(coeff)
    pruned = {mono: c for mono, c in merged.items() if c != 0.0}
    return tuple((c, mono) for mono, c in sorted(pruned.items()))


@dataclass(frozen=True)
class PolyExpr:
    """Canonical sum of real-coefficient monomials; structural equality holds
    exactly when two expressions have identical canonical term lists."""

    terms: tuple[tuple[float, Monomial], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical(self.terms))

    @classmethod
    def constant(cls, value: float) -> "PolyExpr":
        return cls(((float(value), ()),))

    @classmethod
    def variable(cls, kind: str, index: int) -> "PolyExpr":
        return cls(((1.0, ((kind, index, 1),)),))

    def __add__(self, other: "PolyExpr") -> "PolyExpr":
        return PolyExpr(self.terms + other.terms)

    def __sub__(self, other: "PolyExpr") -> "PolyExpr":
        return PolyExpr(self.terms + tuple((-c, m) for c, m in other.terms))

    def __neg__(self) -> "PolyExpr":
        return PolyExpr(tuple((-c, m) for c, m in self.terms))

    def scaled(self, factor: float) -> "PolyExpr":
        return PolyExpr(tuple((c * factor, m) for c, m in self.terms))

    @property
    def uses_y(self) -> bool:
        return any(kind == "y" for _, mono in self.terms for kind, _, _ in mono)

    def max_index(self, kind: str) -> int:
        """Largest index of the given variable kind, or -1 if unused."""
        indices = [i for _, mono in self.terms for k, i, _ in mono if k == kind]
        return max(indices) if indices else -1

    def evaluate(self, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
        """Evaluate at a batch of points: X is (N, D), Y is (N, O) or None."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if Y is not None:
            Y = np.atleast_2d(np.asarray(Y, dtype=float))
        n = X.shape[0]
        total = np.zeros(n)
        for coeff, mono in self.terms:
            part = np.full(n, coeff)
            for kind, index, exponent in mono:
                col = X[:, index] if kind == "x" else self._y_col(Y, index)
                part = part * col**exponent
            total += part
        return total

    def grad_y(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Partial derivatives with respect to each y column: result is (N, O)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        n, n_out = X.shape[0], Y.shape[1]
        grad = np.zeros((n, n_out))
        for coeff, mono in self.terms:
            for pos, (kind, index, exponent) in enumerate(mono):
                if kind != "y":
                    continue
                part = np.full(n, coeff * exponent)
                part = part * Y[:, index] ** (exponent - 1)
                for other_pos, (okind, oindex, oexp) in enumerate(mono):
                    if other_pos == pos:
                        continue
                    col = X[:, oindex] if okind == "x" else Y[:, oindex]
                    part = part * col**oexp
                grad[:, index] += part
        return grad

    @staticmethod
    def _y_col(Y: np.ndarray | None, index: int) -> np.ndarray:
        if Y is None:
            raise ConfigError("expression references y[...] but no outputs were given")
        return Y[:, index]

    def pretty(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for pos, (coeff, mono) in enumerate(self.terms):
            sign = "-" if coeff < 0 else "+"
            factors = []
            magnitude = abs(coeff)
            if magnitude != 1.0 or not mono:
                factors.append(repr(magnitude))
            for kind, index, exponent in mono:
                var = f"{kind}[{index}]"
                factors.append(var if exponent == 1 else f"{var}^{exponent}")
            body = "*".join(factors)
            if pos == 0:
                chunks.append(body if coeff >= 0 else f"-{body}")
            else:
                chunks.append(f"{sign} {body}")
        return " ".join(chunks)
