"""Infinite column-finite matrices, projection families and exact windows.

All public indices are 1-based: e_1, e_2, ... For the Hermite kinds the
oscillator basis psi_0, psi_1, ... is relabelled e_1, e_2, ..., so the
creation operator has entry (n+1, n) = sqrt(n) and position has entry
(n+1, n) = sqrt(n/2).

Every operator here has finite row and column supports, so products are
evaluated through column supports and every window is exact: no infinite sum
is ever truncated.
"""

import bisect
import cmath
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from types import MappingProxyType

import numpy as np

from errors import InvalidSpec, UnboundedSupport, WeightUndefined, WindowTooSmall

log = logging.getLogger(__name__)

DEFAULT_MAX_WINDOW = 10_000_000


class Kind(str, Enum):
    WEIGHTED_SHIFT = "weighted_shift"
    ADJOINT_WEIGHTED_SHIFT = "adjoint_weighted_shift"
    DIAGONAL = "diagonal"
    DILATION_SHIFT = "dilation_shift"
    EXAMPLE_A = "example_A"
    TOEPLITZ = "toeplitz"
    HERMITE_Q = "hermite_q"
    HERMITE_P = "hermite_p"
    CREATION = "creation"
    ANNIHILATION = "annihilation"
    SUM = "sum"
    SCALE = "scale"
    PRODUCT = "product"


WEIGHTED_KINDS = {Kind.WEIGHTED_SHIFT, Kind.ADJOINT_WEIGHTED_SHIFT, Kind.DIAGONAL, Kind.DILATION_SHIFT}


# ----------------------------------------------------------------------------
# Weight formulas
# ----------------------------------------------------------------------------

WEIGHT_NAMES = ("log", "sqrt", "linear", "inverse", "const", "pow")


@dataclass(frozen=True)
class WeightFormula:
    """w_n for n >= 1, drawn from a closed vocabulary."""

    name: str
    value: float = 0.0

    def __post_init__(self):
        if self.name not in WEIGHT_NAMES:
            raise InvalidSpec(f"unknown weight formula {self.name!r}")
        if not math.isfinite(self.value):
            raise InvalidSpec(f"weight parameter must be finite, got {self.value!r}")

    @classmethod
    def parse(cls, text):
        name, _, arg = str(text).strip().partition(":")
        if name in ("const", "pow"):
            if not arg:
                raise InvalidSpec(f"weight formula {name!r} needs a parameter, e.g. {name}:2")
            try:
                return cls(name, float(arg))
            except ValueError:
                raise InvalidSpec(f"bad weight parameter in {text!r}") from None
        if arg:
            raise InvalidSpec(f"weight formula {name!r} takes no parameter")
        return cls(name)

    def text(self):
        if self.name in ("const", "pow"):
            return f"{self.name}:{self.value!r}"
        return self.name

    def __call__(self, n):
        try:
            if self.name == "log":
                w = math.log(n)
            elif self.name == "sqrt":
                w = math.sqrt(n)
            elif self.name == "linear":
                w = float(n)
            elif self.name == "inverse":
                w = 1 / n
            elif self.name == "const":
                w = self.value
            else:
                w = float(n) ** self.value
        except (OverflowError, ValueError, ZeroDivisionError) as e:
            raise WeightUndefined(f"weight {self.text()} undefined at n={n}: {e}") from None
        if not math.isfinite(w):
            raise WeightUndefined(f"weight {self.text()} is not finite at n={n}")
        return w


# ----------------------------------------------------------------------------
# Operator specs
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSpec:
    kind: Kind
    weight: WeightFormula = None
    band: tuple = ()
    factor: complex = 1.0
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind in WEIGHTED_KINDS and self.weight is None:
            raise InvalidSpec(f"{self.kind.value} needs a weight formula")
        if self.kind in (Kind.SUM, Kind.PRODUCT) and len(self.children) < 1:
            raise InvalidSpec(f"{self.kind.value} needs at least one child")
        if self.kind is Kind.SCALE and len(self.children) != 1:
            raise InvalidSpec("scale takes exactly one child")
        if self.kind is Kind.TOEPLITZ:
            offsets = [k for k, _ in self.band]
            if len(set(offsets)) != len(offsets):
                raise InvalidSpec("toeplitz band has repeated offsets")
            if not all(cmath.isfinite(complex(c)) for _, c in self.band):
                raise InvalidSpec("toeplitz band coefficients must be finite")
        if not cmath.isfinite(complex(self.factor)):
            raise InvalidSpec("scale factor must be finite")


def _weight(w):
    return w if isinstance(w, WeightFormula) else WeightFormula.parse(w)


def weighted_shift(weight):
    return OperatorSpec(Kind.WEIGHTED_SHIFT, weight=_weight(weight))


def adjoint_weighted_shift(weight):
    return OperatorSpec(Kind.ADJOINT_WEIGHTED_SHIFT, weight=_weight(weight))


def diagonal(weight):
    return OperatorSpec(Kind.DIAGONAL, weight=_weight(weight))


def dilation_shift(weight="sqrt"):
    return OperatorSpec(Kind.DILATION_SHIFT, weight=_weight(weight))


def example_a():
    return OperatorSpec(Kind.EXAMPLE_A)


def toeplitz(band):
    items = tuple(sorted((int(k), complex(c)) for k, c in dict(band).items()))
    return OperatorSpec(Kind.TOEPLITZ, band=items)


def hermite_q():
    return OperatorSpec(Kind.HERMITE_Q)


def hermite_p():
    return OperatorSpec(Kind.HERMITE_P)


def creation():
    return OperatorSpec(Kind.CREATION)


def annihilation():
    return OperatorSpec(Kind.ANNIHILATION)


def op_sum(*children):
    return OperatorSpec(Kind.SUM, children=tuple(children))


def scale(factor, child):
    return OperatorSpec(Kind.SCALE, factor=complex(factor), children=(child,))


def product(*children):
    """T = children[0] @ children[1] @ ... (the rightmost acts first)."""
    return OperatorSpec(Kind.PRODUCT, children=tuple(children))


# ----------------------------------------------------------------------------
# Columns, supports, propagation
# ----------------------------------------------------------------------------


def _col_weighted_shift(spec, j):
    return {j + 1: complex(spec.weight(j))}


def _col_adjoint_shift(spec, j):
    return {j - 1: complex(spec.weight(j - 1))} if j >= 2 else {}


def _col_diagonal(spec, j):
    return {j: complex(spec.weight(j))}


def _col_dilation(spec, j):
    return {2 * j: complex(spec.weight(j))}


def _col_example_a(spec, j):
    col = {j: complex(float(j) ** 2)}
    if j % 2 == 1:
        col[j + 1] = complex(1 / j)
    return col


def _col_toeplitz(spec, j):
    return {j + k: c for k, c in spec.band if j + k >= 1}


def _hermite_step(n):
    try:
        return math.sqrt(n / 2)
    except OverflowError:
        raise WeightUndefined(f"hermite weight undefined at n={n}") from None


def _col_hermite_q(spec, j):
    col = {j + 1: complex(_hermite_step(j))}
    if j >= 2:
        col[j - 1] = complex(_hermite_step(j - 1))
    return col


def _col_hermite_p(spec, j):
    col = {j + 1: complex(0.0, _hermite_step(j))}
    if j >= 2:
        col[j - 1] = complex(0.0, -_hermite_step(j - 1))
    return col


def _col_creation(spec, j):
    return {j + 1: complex(math.sqrt(j))}


def _col_annihilation(spec, j):
    return {j - 1: complex(math.sqrt(j - 1))} if j >= 2 else {}


def _col_sum(spec, j):
    col = {}
    for child in spec.children:
        for i, v in column(child, j).items():
            col[i] = col.get(i, 0j) + v
    return col


def _col_scale(spec, j):
    return {i: spec.factor * v for i, v in column(spec.children[0], j).items()}


def _col_product(spec, j):
    vec = {j: 1 + 0j}
    for child in reversed(spec.children):
        out = {}
        for k, v in vec.items():
            for i, t in column(child, k).items():
                out[i] = out.get(i, 0j) + t * v
        vec = out
    return vec


_COLUMNS = {
    Kind.WEIGHTED_SHIFT: _col_weighted_shift,
    Kind.ADJOINT_WEIGHTED_SHIFT: _col_adjoint_shift,
    Kind.DIAGONAL: _col_diagonal,
    Kind.DILATION_SHIFT: _col_dilation,
    Kind.EXAMPLE_A: _col_example_a,
    Kind.TOEPLITZ: _col_toeplitz,
    Kind.HERMITE_Q: _col_hermite_q,
    Kind.HERMITE_P: _col_hermite_p,
    Kind.CREATION: _col_creation,
    Kind.ANNIHILATION: _col_annihilation,
    Kind.SUM: _col_sum,
    Kind.SCALE: _col_scale,
    Kind.PRODUCT: _col_product,
}


@lru_cache(maxsize=1 << 16)
def column(spec, j):
    """Structural support of column j mapped to its entries (zeros may appear).

    The mapping is cached and read-only.
    """
    if j < 1:
        raise ValueError(f"column index must be >= 1, got {j}")
    return MappingProxyType(_COLUMNS[spec.kind](spec, j))


def _row_leaf(spec, i):
    kind = spec.kind
    if kind in (Kind.WEIGHTED_SHIFT, Kind.CREATION):
        return (i - 1,) if i >= 2 else ()
    if kind in (Kind.ADJOINT_WEIGHTED_SHIFT, Kind.ANNIHILATION):
        return (i + 1,)
    if kind is Kind.DIAGONAL:
        return (i,)
    if kind is Kind.DILATION_SHIFT:
        return (i // 2,) if i % 2 == 0 else ()
    if kind is Kind.EXAMPLE_A:
        return (i - 1, i) if i % 2 == 0 else (i,)
    if kind is Kind.TOEPLITZ:
        return tuple(sorted(i - k for k, _ in spec.band if i - k >= 1))
    if kind in (Kind.HERMITE_Q, Kind.HERMITE_P):
        return (i - 1, i + 1) if i >= 2 else (i + 1,)
    raise AssertionError(kind)


@lru_cache(maxsize=1 << 16)
def row_support(spec, i):
    """Columns j that may hold a nonzero entry in row i."""
    if i < 1:
        raise ValueError(f"row index must be >= 1, got {i}")
    if spec.kind is Kind.SUM:
        cols = set()
        for child in spec.children:
            cols.update(row_support(child, i))
        return tuple(sorted(cols))
    if spec.kind is Kind.SCALE:
        return row_support(spec.children[0], i)
    if spec.kind is Kind.PRODUCT:
        rows = {i}
        for child in spec.children:
            rows = {j for r in rows for j in row_support(child, r)}
        return tuple(sorted(rows))
    return _row_leaf(spec, i)


def propagation(spec):
    """sup |i - j| over the structural support, or None when unbounded."""
    kind = spec.kind
    if kind is Kind.DIAGONAL:
        return 0
    if kind is Kind.DILATION_SHIFT:
        return None
    if kind is Kind.TOEPLITZ:
        return max((abs(k) for k, _ in spec.band), default=0)
    if kind is Kind.SCALE:
        return propagation(spec.children[0])
    if kind in (Kind.SUM, Kind.PRODUCT):
        parts = [propagation(c) for c in spec.children]
        if any(p is None for p in parts):
            return None
        return max(parts) if kind is Kind.SUM else sum(parts)
    return 1


def entry(spec, i, j):
    if i < 1 or j < 1:
        raise ValueError(f"indices are 1-based, got ({i}, {j})")
    return column(spec, j).get(i, 0j)


# ----------------------------------------------------------------------------
# Windows
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Window:
    """Dense complex N x N matrix, read-only once built."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"a window is a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise WeightUndefined("window contains non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self):
        return self.entries.shape[0]

    def padded(self, size):
        if size < self.dim:
            raise WindowTooSmall(f"cannot pad a {self.dim}-window down to {size}")
        out = np.zeros((size, size), dtype=complex)
        out[: self.dim, : self.dim] = self.entries
        return Window(out)

    def leading(self, size):
        return Window(self.entries[:size, :size])


def compress(spec, N):
    """P_N T P_N as an N x N window."""
    if N < 1:
        raise ValueError(f"window dimension must be >= 1, got {N}")
    out = np.zeros((N, N), dtype=complex)
    for j in range(1, N + 1):
        for i, v in column(spec, j).items():
            if i <= N:
                out[i - 1, j - 1] = v
    return Window(out)


# ----------------------------------------------------------------------------
# Index rules and projection families
# ----------------------------------------------------------------------------

_AFFINE = re.compile(r"^(?:(\d+)\s*\*\s*)?n(?:\s*([+-])\s*(\d+))?$")
_GEOMETRIC = re.compile(r"^(\d+)\s*\^\s*n$")
_POWER = re.compile(r"^n\s*\^\s*(\d+)$")


@dataclass(frozen=True)
class IndexRule:
    """A strictly increasing sequence of positive integers k_1 < k_2 < ..."""

    kind: str
    values: tuple = ()
    a: int = 1
    b: int = 0

    def __post_init__(self):
        if self.kind == "list":
            vals = tuple(int(v) for v in self.values)
            if not vals or vals[0] < 1 or any(x >= y for x, y in zip(vals, vals[1:])):
                raise InvalidSpec(f"index list must be positive and strictly increasing: {vals}")
            object.__setattr__(self, "values", vals)
        elif self.kind == "affine":
            if self.a < 1 or self.a + self.b < 1:
                raise InvalidSpec(f"affine rule {self.text()} is not positive and increasing")
        elif self.kind == "geometric":
            if self.a < 2:
                raise InvalidSpec("geometric rule needs base >= 2")
        elif self.kind == "power":
            if self.a < 1:
                raise InvalidSpec("power rule needs exponent >= 1")
        else:
            raise InvalidSpec(f"unknown index rule {self.kind!r}")

    @classmethod
    def parse(cls, raw):
        if isinstance(raw, IndexRule):
            return raw
        if isinstance(raw, (list, tuple)):
            return cls("list", tuple(raw))
        text = str(raw).replace(" ", "")
        m = _GEOMETRIC.match(text)
        if m:
            return cls("geometric", a=int(m.group(1)))
        m = _POWER.match(text)
        if m:
            return cls("power", a=int(m.group(1)))
        m = _AFFINE.match(text)
        if m:
            a = int(m.group(1) or 1)
            b = int(m.group(3) or 0) * (-1 if m.group(2) == "-" else 1)
            return cls("affine", a=a, b=b)
        raise InvalidSpec(f"cannot parse index rule {raw!r}")

    def text(self):
        if self.kind == "list":
            return list(self.values)
        if self.kind == "geometric":
            return f"{self.a}^n"
        if self.kind == "power":
            return f"n^{self.a}"
        if self.b == 0:
            return "n" if self.a == 1 else f"{self.a}*n"
        sign = "+" if self.b > 0 else "-"
        head = "n" if self.a == 1 else f"{self.a}*n"
        return f"{head}{sign}{abs(self.b)}"

    @property
    def length(self):
        return len(self.values) if self.kind == "list" else None

    def __call__(self, n):
        if n < 1:
            raise IndexError(f"index rules start at n=1, got {n}")
        if self.kind == "list":
            if n > len(self.values):
                raise IndexError(f"index list has only {len(self.values)} terms")
            return self.values[n - 1]
        if self.kind == "geometric":
            return self.a ** n
        if self.kind == "power":
            return n ** self.a
        return self.a * n + self.b

    def prefix(self, n):
        return [self(t) for t in range(1, n + 1)]


@dataclass(frozen=True)
class CoordinateSet:
    """Union of disjoint, non-adjacent closed index intervals, sorted."""

    intervals: tuple

    @classmethod
    def from_intervals(cls, intervals):
        merged = []
        for lo, hi in sorted(intervals):
            if merged and lo <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    @property
    def rank(self):
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    @property
    def max_index(self):
        return self.intervals[-1][1] if self.intervals else 0

    def __contains__(self, i):
        k = bisect.bisect_right(self.intervals, (i, math.inf)) - 1
        return k >= 0 and self.intervals[k][0] <= i <= self.intervals[k][1]

    def __iter__(self):
        for lo, hi in self.intervals:
            yield from range(lo, hi + 1)

    def edge_indices(self, reach):
        """Indices within `reach` of an interval edge; all indices if reach is None."""
        if reach is None:
            yield from self
            return
        for lo, hi in self.intervals:
            if hi - lo + 1 <= 2 * reach:
                yield from range(lo, hi + 1)
            else:
                yield from range(lo, lo + reach)
                yield from range(hi - reach + 1, hi + 1)


class FamilyKind(str, Enum):
    CANONICAL = "canonical"
    SPARSE = "sparse"
    BLOCKS = "blocks"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class ProjectionFamily:
    kind: FamilyKind
    indices: IndexRule = None
    boundaries: IndexRule = None
    selector: IndexRule = None
    bases: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.kind is FamilyKind.SPARSE and self.indices is None:
            raise InvalidSpec("sparse family needs an index rule")
        if self.kind is FamilyKind.BLOCKS and self.boundaries is None:
            raise InvalidSpec("blocks family needs boundaries")
        if self.kind is FamilyKind.EXPLICIT:
            if not self.bases:
                raise InvalidSpec("explicit family needs at least one range basis")
            for k, v in enumerate(self.bases, start=1):
                gram = v.conj().T @ v
                if v.ndim != 2 or np.max(np.abs(gram - np.eye(v.shape[1])), initial=0.0) > 1e-12:
                    raise InvalidSpec(f"basis {k} of the explicit family is not orthonormal")

    @property
    def length(self):
        """Number of members, or None for an infinite family."""
        if self.kind is FamilyKind.EXPLICIT:
            return len(self.bases)
        if self.kind is FamilyKind.SPARSE:
            return self.indices.length
        if self.selector is not None:
            if self.selector.length is not None:
                return self.selector.length
            if self.boundaries.length is not None:
                n = 0
                while self.selector(n + 1) <= self.boundaries.length:
                    n += 1
                return n
            return None
        return self.boundaries.length


def canonical_family():
    return ProjectionFamily(FamilyKind.CANONICAL)


def sparse_coordinates(indices):
    rule = IndexRule.parse(indices)
    return ProjectionFamily(FamilyKind.SPARSE, indices=rule)


def _boundary_rule(boundaries):
    if isinstance(boundaries, (list, tuple)):
        vals = list(boundaries)
        if vals and vals[0] == 0:
            vals = vals[1:]
        return IndexRule("list", tuple(vals))
    return IndexRule.parse(boundaries)


def block_family(boundaries, selector=None):
    """P_n onto (0, b_n], or, with a selector, the union of blocks k_1..k_n."""
    sel = IndexRule.parse(selector) if selector is not None else None
    return ProjectionFamily(FamilyKind.BLOCKS, boundaries=_boundary_rule(boundaries), selector=sel)


def explicit_family(bases):
    return ProjectionFamily(FamilyKind.EXPLICIT, bases=tuple(np.asarray(v, dtype=complex) for v in bases))


def _member(rule, n, what):
    try:
        return rule(n)
    except IndexError as e:
        raise WindowTooSmall(f"{what}: {e}") from None


def family_coordinates(fam, n):
    """The coordinate set of the n-th projection (None for explicit families)."""
    if n < 1:
        raise ValueError(f"families are indexed from 1, got {n}")
    if fam.kind is FamilyKind.CANONICAL:
        return CoordinateSet(((1, n),))
    if fam.kind is FamilyKind.SPARSE:
        return CoordinateSet.from_intervals((k, k) for k in (_member(fam.indices, t, "sparse indices") for t in range(1, n + 1)))
    if fam.kind is FamilyKind.BLOCKS:
        if fam.selector is None:
            return CoordinateSet(((1, _member(fam.boundaries, n, "block boundaries")),))
        spans = []
        for t in range(1, n + 1):
            k = _member(fam.selector, t, "block selector")
            lo = _member(fam.boundaries, k - 1, "block boundaries") if k > 1 else 0
            spans.append((lo + 1, _member(fam.boundaries, k, "block boundaries")))
        return CoordinateSet.from_intervals(spans)
    return None


def family_rank(fam, n):
    if fam.kind is FamilyKind.EXPLICIT:
        return fam.bases[n - 1].shape[1]
    return family_coordinates(fam, n).rank


def projection_window(fam, n, N):
    """N x N matrix of the n-th projection of the family."""
    if fam.kind is FamilyKind.EXPLICIT:
        v = fam.bases[n - 1]
        if v.shape[0] > N:
            raise WindowTooSmall(f"projection {n} lives in dimension {v.shape[0]} > {N}")
        out = np.zeros((N, N), dtype=complex)
        out[: v.shape[0], : v.shape[0]] = v @ v.conj().T
        return Window(out)
    coords = family_coordinates(fam, n)
    if coords.max_index > N:
        raise WindowTooSmall(f"projection {n} touches index {coords.max_index} > {N}")
    diag = np.zeros(N)
    for lo, hi in coords.intervals:
        diag[lo - 1 : hi] = 1.0
    return Window(np.diag(diag).astype(complex))


# ----------------------------------------------------------------------------
# Commutators
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CapturedCommutator:
    """Every nonzero entry of [T, P_n], with m such that [T,P_n] = P_m [T,P_n] P_m."""

    n: int
    rank: int
    bound: int
    rows: tuple
    cols: tuple
    values: np.ndarray

    def window(self, size=None):
        size = self.bound if size is None else size
        if size < self.bound:
            raise WindowTooSmall(f"commutator needs a {self.bound}-window, got {size}")
        out = np.zeros((size, size), dtype=complex)
        for i, j, v in zip(self.rows, self.cols, self.values):
            out[i - 1, j - 1] = v
        return Window(out)


def _coordinate_commutator(spec, coords, n, max_window):
    reach = propagation(spec)
    if reach is None and coords.rank > max_window:
        raise UnboundedSupport(
            f"{spec.kind.value} has unbounded propagation; scanning {coords.rank} indices exceeds {max_window}"
        )
    bound = coords.max_index
    found = {}
    for j in coords.edge_indices(reach):
        for i, v in column(spec, j).items():
            bound = max(bound, i)
            if i not in coords:
                found[(i, j)] = v
        for k in row_support(spec, j):
            bound = max(bound, k)
            if k not in coords:
                found[(j, k)] = -entry(spec, j, k)
    keys = sorted(found)
    return CapturedCommutator(
        n=n,
        rank=coords.rank,
        bound=bound,
        rows=tuple(i for i, _ in keys),
        cols=tuple(j for _, j in keys),
        values=np.array([found[key] for key in keys], dtype=complex),
    )


def _explicit_bound(spec, d):
    bound = d
    for j in range(1, d + 1):
        bound = max(bound, max(column(spec, j), default=0), max(row_support(spec, j), default=0))
    return bound


def _explicit_commutator_matrix(spec, fam, n):
    v = fam.bases[n - 1]
    d = v.shape[0]
    m = _explicit_bound(spec, d)
    t = compress(spec, m).entries
    p = np.zeros((m, m), dtype=complex)
    p[:d, :d] = v @ v.conj().T
    return m, t @ p - p @ t


def capture_commutator(spec, fam, n, max_window=DEFAULT_MAX_WINDOW):
    """The commutator [T, P_n] in coordinate form."""
    if fam.kind is FamilyKind.EXPLICIT:
        m, c = _explicit_commutator_matrix(spec, fam, n)
        rows, cols = np.nonzero(c)
        return CapturedCommutator(
            n=n,
            rank=family_rank(fam, n),
            bound=m,
            rows=tuple(int(i) + 1 for i in rows),
            cols=tuple(int(j) + 1 for j in cols),
            values=c[rows, cols],
        )
    result = _coordinate_commutator(spec, family_coordinates(fam, n), n, max_window)
    log.debug("captured [%s, P_%d]: bound %d, %d entries", spec.kind.value, n, result.bound, len(result.values))
    return result


def capture_bound(spec, n, fam=None, max_window=DEFAULT_MAX_WINDOW):
    """m with [T, P] = P_m [T, P] P_m for the n-th projection (canonical by default)."""
    fam = canonical_family() if fam is None else fam
    if fam.kind is FamilyKind.EXPLICIT:
        return _explicit_bound(spec, fam.bases[n - 1].shape[0])
    return _coordinate_commutator(spec, family_coordinates(fam, n), n, max_window).bound


def commutator_window(spec, fam, n, max_window=DEFAULT_MAX_WINDOW):
    """The m x m matrix of [T, P_n] with m = capture_bound; it holds every nonzero entry."""
    if fam.kind is FamilyKind.EXPLICIT:
        _, c = _explicit_commutator_matrix(spec, fam, n)
        return Window(c)
    captured = capture_commutator(spec, fam, n, max_window)
    if captured.bound > max_window:
        raise UnboundedSupport(f"commutator window {captured.bound} exceeds {max_window}")
    return captured.window()
