"""Monomial candidate terms ``q^a * qd^b`` and their text form.

Grammar of a library expression (whitespace ignored)::

    library := term (',' term)*
    term    := factor ('*' factor)*
    factor  := ('q' | 'qd') ('^' uint)?

Repeated factors add exponents, so ``q*q`` is the same term as ``q^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DuplicateTerm, ParseError
from .series import TimeSeries


@dataclass(frozen=True, order=True)
class BasisTerm:
    q_exp: int
    qd_exp: int

    def __post_init__(self):
        if self.q_exp < 0 or self.qd_exp < 0:
            raise ValueError("exponents must be nonnegative")
        if self.q_exp + self.qd_exp < 1:
            raise ValueError("constant term is not allowed")

    def __call__(self, q, qd):
        """Evaluate on scalars or arrays."""
        out = 1.0
        if self.q_exp:
            out = out * q**self.q_exp
        if self.qd_exp:
            out = out * qd**self.qd_exp
        return out

    def render(self) -> str:
        parts = []
        for name, e in (("q", self.q_exp), ("qd", self.qd_exp)):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)

    @property
    def is_stiffness(self) -> bool:
        return self.qd_exp == 0


class BasisLibrary:
    """Ordered collection of distinct terms; coefficient vectors follow this
    order."""

    def __init__(self, terms):
        terms = tuple(terms)
        seen = set()
        for t in terms:
            key = (t.q_exp, t.qd_exp)
            if key in seen:
                raise DuplicateTerm(f"term {t.render()} appears more than once")
            seen.add(key)
        if not terms:
            raise ValueError("library must contain at least one term")
        self.terms = terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[BasisTerm]:
        return iter(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def __eq__(self, other):
        return isinstance(other, BasisLibrary) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return f"BasisLibrary({self.render()!r})"

    def render(self) -> str:
        return ", ".join(t.render() for t in self.terms)

    @property
    def is_stiffness(self) -> bool:
        return all(t.is_stiffness for t in self.terms)

    def matrix(self, q, qd) -> np.ndarray:
        """Columns of term values, one row per sample."""
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        return np.column_stack([np.broadcast_to(t(q, qd), q.shape) for t in self.terms])

    @classmethod
    def polynomial(cls, degree: int) -> BasisLibrary:
        """Stiffness library ``q, q^2, ..., q^degree``."""
        return cls(BasisTerm(n, 0) for n in range(1, degree + 1))


def parse_terms(expr: str) -> BasisLibrary:
    return _Parser(expr).library()


def eval_term(term: BasisTerm, q: TimeSeries, qd: TimeSeries) -> TimeSeries:
    q.check_grid(qd)
    return q.with_values(np.broadcast_to(term(q.values, qd.values), q.values.shape))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _offset(self) -> int:
        return len(self.text[: self.pos].encode("utf-8"))

    def _fail(self, expected: str):
        found = self._peek() or "end of input"
        raise ParseError(f"expected {expected}, found {found!r}", self._offset())

    def library(self) -> BasisLibrary:
        if not self.text.strip():
            raise ParseError("expected a term, found empty expression", 0)
        terms = []
        starts = []
        while True:
            self._skip()
            starts.append(self._offset())
            terms.append(self.term())
            if self._peek() == ",":
                self.pos += 1
                continue
            if self._peek():
                self._fail("',' or '*'")
            break
        seen = {}
        for t, start in zip(terms, starts):
            if t in seen:
                raise DuplicateTerm(
                    f"term at offset {start} duplicates term at offset {seen[t]} "
                    f"({t.render()})"
                )
            seen[t] = start
        return BasisLibrary(terms)

    def term(self) -> BasisTerm:
        start = self._offset()
        a, b = self.factor()
        while self._peek() == "*":
            self.pos += 1
            da, db = self.factor()
            a += da
            b += db
        if a + b < 1:
            raise ParseError("constant term is not allowed", start)
        return BasisTerm(a, b)

    def factor(self) -> tuple[int, int]:
        self._skip()
        if self.text.startswith("qd", self.pos):
            self.pos += 2
            is_q = False
        elif self.text.startswith("q", self.pos):
            self.pos += 1
            is_q = True
        else:
            self._fail("'q' or 'qd'")
        exp = 1
        if self._peek() == "^":
            self.pos += 1
            self._skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos] in "0123456789":
                self.pos += 1
            if start == self.pos:
                self._fail("unsigned integer exponent")
            exp = int(self.text[start : self.pos])
        return (exp, 0) if is_q else (0, exp)
