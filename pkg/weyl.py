"""Exact arithmetic in the Weyl algebra C<p, q | qp - pq = i>.

Elements are kept in normal form sum c_kl p^k q^l (q's to the right of p's)
with Gaussian-rational coefficients from sympy's QQ_I, so subspace dimensions
are exact ranks. represent() realizes elements on the Hermite basis through
the hermite_p / hermite_q windows of opcore.
"""

import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from sympy import I, Rational, sympify
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.domains.gaussiandomains import GaussianRational
from sympy.polys.matrices import DomainMatrix
from sympy.polys.polyerrors import CoercionFailed

from errors import DegreeExceedsWindow, InvalidSpec
from opcore import Window, compress, hermite_p, hermite_q

log = logging.getLogger(__name__)


def coefficient(value):
    """An exact Gaussian rational from an int, Rational, decimal string or float."""
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, complex):
        value = Rational(str(value.real)) + I * Rational(str(value.imag))
    elif isinstance(value, float):
        value = Rational(str(value))
    try:
        return QQ_I.from_sympy(sympify(value))
    except (CoercionFailed, TypeError, ValueError, SyntaxError) as e:
        raise InvalidSpec(f"not a Gaussian rational: {value!r} ({e})") from None


def to_complex(c):
    return complex(float(c.x), float(c.y))


@dataclass(frozen=True)
class WeylElement:
    """sum c_kl p^k q^l; terms are ((k, l), c) sorted by (k, l), zero coefficients dropped."""

    terms: tuple = ()

    @classmethod
    def from_terms(cls, mapping):
        acc = {}
        for key, c in dict(mapping).items():
            k, l = (int(e) for e in key)
            if k < 0 or l < 0:
                raise InvalidSpec(f"negative exponent in monomial p^{k} q^{l}")
            acc[(k, l)] = acc.get((k, l), QQ_I.zero) + coefficient(c)
        return cls(tuple(sorted((key, c) for key, c in acc.items() if c)))

    @classmethod
    def scalar(cls, c):
        return cls.from_terms({(0, 0): c})

    @classmethod
    def one(cls):
        return cls.scalar(1)

    @classmethod
    def p(cls):
        return cls.from_terms({(1, 0): 1})

    @classmethod
    def q(cls):
        return cls.from_terms({(0, 1): 1})

    @classmethod
    def monomial(cls, k, l, c=1):
        return cls.from_terms({(k, l): c})

    def as_dict(self):
        return dict(self.terms)

    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        return max((k + l for (k, l), _ in self.terms), default=0)

    def __add__(self, other):
        acc = self.as_dict()
        for key, c in other.terms:
            acc[key] = acc.get(key, QQ_I.zero) + c
        return WeylElement.from_terms(acc)

    def __neg__(self):
        return WeylElement(tuple((key, -c) for key, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, WeylElement):
            return multiply(self, other)
        c = coefficient(other)
        return WeylElement.from_terms({key: v * c for key, v in self.terms})

    def __rmul__(self, other):
        return self * other

    def __pow__(self, exponent):
        if exponent < 0:
            raise ValueError("negative powers are not defined")
        out = WeylElement.one()
        for _ in range(exponent):
            out = multiply(out, self)
        return out

    def __str__(self):
        return format_element(self)


@lru_cache(maxsize=None)
def _reorder(b, c):
    """Normal form of q^b p^c as ((k, l), coefficient) pairs.

    The rightmost q crosses p^c one factor at a time, each crossing applying
    qp -> pq + i; this gives q^b p^c = (q^{b-1} p^c) q + i c q^{b-1} p^{c-1}.
    """
    if b == 0 or c == 0:
        return (((c, b), QQ_I.one),)
    acc = {}
    for (k, l), v in _reorder(b - 1, c):
        acc[(k, l + 1)] = acc.get((k, l + 1), QQ_I.zero) + v
    lower = QQ_I(0, c)
    for (k, l), v in _reorder(b - 1, c - 1):
        acc[(k, l)] = acc.get((k, l), QQ_I.zero) + lower * v
    return tuple(sorted((key, v) for key, v in acc.items() if v))


def multiply(x, y):
    acc = {}
    for (a, b), cx in x.terms:
        for (c, d), cy in y.terms:
            coeff = cx * cy
            for (k, l), r in _reorder(b, c):
                key = (a + k, l + d)
                acc[key] = acc.get(key, QQ_I.zero) + coeff * r
    return WeylElement(tuple(sorted((key, v) for key, v in acc.items() if v)))


# ----------------------------------------------------------------------------
# Foelner subspaces
# ----------------------------------------------------------------------------

def monomials_up_to(n):
    return [(k, d - k) for d in range(n + 1) for k in range(d, -1, -1)]


def level_dimension(n):
    return (n + 1) * (n + 2) // 2


def exact_rank(rows):
    """Rank over QQ_I of sparse rows given as {column: coefficient} dicts."""
    rows = [r for r in rows if r]
    if not rows:
        return 0
    columns = sorted({key for r in rows for key in r})
    index = {key: j for j, key in enumerate(columns)}
    data = {i: {index[key]: v for key, v in r.items()} for i, r in enumerate(rows)}
    return DomainMatrix(data, (len(rows), len(columns)), QQ_I).rank()


@dataclass(frozen=True)
class MonomialSubspace:
    """Span of finitely many elements, each a coefficient row over its monomials."""

    spanning: tuple

    @classmethod
    def level(cls, n):
        return cls(tuple(WeylElement.monomial(k, l) for k, l in monomials_up_to(n)))

    @property
    def monomials(self):
        return sorted({key for x in self.spanning for key, _ in x.terms})

    @property
    def dim(self):
        return exact_rank(x.as_dict() for x in self.spanning)

    def __add__(self, other):
        return MonomialSubspace(self.spanning + other.spanning)

    def times(self, a):
        """a V = span{a x : x in V}."""
        return MonomialSubspace(tuple(multiply(a, x) for x in self.spanning))


def _sum_dimension(a, n):
    """dim(a V_n + V_n), counting only what a V_n adds outside V_n."""
    reach = n - a.degree
    extra = []
    for k, l in monomials_up_to(n):
        if k + l <= reach:
            continue
        image = multiply(a, WeylElement.monomial(k, l))
        extra.append({key: c for key, c in image.terms if sum(key) > n})
    return level_dimension(n) + exact_rank(extra)


def foelner_ratio(a, n):
    """dim(a V_n + V_n) / dim(V_n) as an exact rational."""
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    return Rational(_sum_dimension(a, n), level_dimension(n))


@dataclass(frozen=True)
class WitnessRow:
    element: str
    n: int
    dim_v: int
    dim_sum: int
    ratio: Rational

    def as_row(self):
        return {
            "element": self.element,
            "n": self.n,
            "dim_v": self.dim_v,
            "dim_sum": self.dim_sum,
            "ratio": f"{self.ratio.p}/{self.ratio.q}",
        }


def witness_bound(delta, epsilon):
    """ceil((delta + 2) / (sqrt(1 + epsilon) - 1))."""
    return math.ceil((delta + 2) / (math.sqrt(1 + float(epsilon)) - 1))


def _rows_at(elements, n):
    rows = []
    for x in elements:
        dim_sum = _sum_dimension(x, n)
        dim_v = level_dimension(n)
        rows.append(WitnessRow(format_element(x), n, dim_v, dim_sum, Rational(dim_sum, dim_v)))
    return rows


def amenability_witness(F, epsilon):
    """Smallest n with dim(a V_n + V_n) <= (1 + epsilon) dim V_n for all a in F."""
    F = list(F)
    if not F:
        raise ValueError("the finite set F is empty")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    limit = 1 + Rational(str(epsilon))
    delta = max(x.degree for x in F)
    bound = witness_bound(delta, epsilon)
    for n in range(bound + 1):
        rows = _rows_at(F, n)
        if all(r.ratio <= limit for r in rows):
            log.debug("witness n=%d (proof bound %d)", n, bound)
            return n, rows
    # the bound itself always qualifies; reaching this means the search above was cut short
    return bound, _rows_at(F, bound)


# ----------------------------------------------------------------------------
# Schroedinger representation
# ----------------------------------------------------------------------------

def represent(x, N):
    """N x N window of x with p, q acting as the Hermite momentum and position."""
    deg = x.degree
    if N <= deg:
        raise DegreeExceedsWindow(f"degree {deg} needs a window larger than {N}")
    big = N + deg
    p = compress(hermite_p(), big).entries
    q = compress(hermite_q(), big).entries
    p_pow, q_pow = {0: np.eye(big, dtype=complex)}, {0: np.eye(big, dtype=complex)}

    def power(cache, base, k):
        if k not in cache:
            cache[k] = power(cache, base, k - 1) @ base
        return cache[k]

    out = np.zeros((big, big), dtype=complex)
    for (k, l), c in x.terms:
        out += to_complex(c) * (power(p_pow, p, k) @ power(q_pow, q, l))
    return Window(out[:N, :N])


def phi_projection(n, N):
    """Projection onto span{pi(m) e_1 : m a monomial of V_n} inside an N-window."""
    columns = [represent(WeylElement.monomial(k, l), N).entries[:, 0] for k, l in monomials_up_to(n)]
    basis = scipy.linalg.orth(np.column_stack(columns), rcond=1e-9)
    return Window(basis @ basis.conj().T)


# ----------------------------------------------------------------------------
# Text form
# ----------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?(?:/\d+)?)|([ipq])|(\^)|([*+\-()]))")


def _tokens(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise InvalidSpec(f"unexpected character {text[pos]!r} at {pos} in {text!r}")
        number, name, caret, op = m.groups()
        out.append(("num", number) if number else ("name", name) if name else ("op", caret or op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokens(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def fail(self, what):
        raise InvalidSpec(f"{what} at token {self.pos} in {self.text!r}")

    def expr(self):
        sign = 1
        if self.peek() in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        out = self.term() * sign
        while self.peek() in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
            out = out + self.term() * sign
        return out

    def term(self):
        out = self.factor()
        while self.peek() == ("op", "*"):
            self.take()
            out = multiply(out, self.factor())
        return out

    def factor(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, value = self.take()
            if kind != "num" or not value.isdigit():
                self.fail("expected a non-negative integer exponent")
            base = base ** int(value)
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return WeylElement.scalar(Rational(value))
        if kind == "name":
            if value == "i":
                return WeylElement.scalar(I)
            return WeylElement.p() if value == "p" else WeylElement.q()
        if (kind, value) == ("op", "("):
            inner = self.expr()
            if self.take() != ("op", ")"):
                self.fail("expected ')'")
            return inner
        self.fail("expected a number, i, p, q or '('")

    def parse(self):
        if not self.tokens:
            raise InvalidSpec("empty Weyl element")
        out = self.expr()
        if self.pos != len(self.tokens):
            self.fail("trailing input")
        return out


def parse_element(text):
    """'2*p^2*q - i*q^3' -> normal form; products multiply in written order."""
    return _Parser(str(text)).parse()


def _rational_text(r):
    r = QQ.to_sympy(r)
    return str(r.p) if r.q == 1 else f"{r.p}/{r.q}"


def _coefficient_text(c):
    """(sign, text) of a coefficient; text is empty for a unit."""
    re_, im_ = c.x, c.y
    if im_ == 0:
        sign = -1 if re_ < 0 else 1
        mag = _rational_text(abs(re_))
        return sign, "" if mag == "1" else mag
    if re_ == 0:
        sign = -1 if im_ < 0 else 1
        mag = _rational_text(abs(im_))
        return sign, "i" if mag == "1" else f"{mag}*i"
    imag = _rational_text(abs(im_))
    imag = "i" if imag == "1" else f"{imag}*i"
    return 1, f"({_rational_text(re_)}{'-' if im_ < 0 else '+'}{imag})"


def _monomial_text(k, l):
    parts = []
    for name, e in (("p", k), ("q", l)):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_element(x):
    if x.is_zero:
        return "0"
    out = []
    for (k, l), c in x.terms:
        sign, coeff = _coefficient_text(c)
        mono = _monomial_text(k, l)
        body = "*".join(part for part in (coeff, mono) if part) or "1"
        if not out:
            out.append(f"-{body}" if sign < 0 else body)
        else:
            out.append(f"{'-' if sign < 0 else '+'} {body}")
    return " ".join(out)
