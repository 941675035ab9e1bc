"""Eigenvalue distributions of Hermitian compressions against symbol moments.

For a Hermitian banded Toeplitz operator with symbol f(t) = sum c_k e^{ikt},
the normalized eigenvalue counts of T_n = P_n T P_n converge weak-* to the
pushforward of normalized arclength under f. Moments f -> lambda^p stand in
for general test functions: the reference is the constant Fourier coefficient
of f^p, computed by exact repeated convolution.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from errors import InvalidSpec, NonHermitianCompression, NumericalFailure
from opcore import Kind, compress, propagation

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EmpiricalSpectralMeasure:
    n: int
    eigenvalues: np.ndarray

    @property
    def weight(self):
        return 1.0 / self.n

    @property
    def mass(self):
        return self.weight * len(self.eigenvalues)


def _banded_upper(a, bandwidth):
    n = a.shape[0]
    band = np.zeros((bandwidth + 1, n), dtype=a.dtype)
    for k in range(bandwidth + 1):
        band[bandwidth - k, k:] = np.diagonal(a, k)
    return band


def empirical_spectrum(spec, n, tol=HERMITIAN_TOL):
    a = compress(spec, n).entries
    gap = float(np.max(np.abs(a - a.conj().T)))
    if gap > tol:
        raise NonHermitianCompression(f"{spec.kind.value} compression at n={n} is off Hermitian by {gap!r}")
    reach = propagation(spec)
    try:
        if reach is not None and 2 * reach + 1 < n:
            values = scipy.linalg.eigvals_banded(_banded_upper(a, reach), lower=False, check_finite=False)
        else:
            values = scipy.linalg.eigvalsh(a, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"eigenvalues of the {n}-compression failed: {e}") from None
    return EmpiricalSpectralMeasure(n=n, eigenvalues=np.sort(values))


def moment(m, p):
    """(1/d_n) sum lambda_i^p."""
    if p < 0:
        raise ValueError(f"moment order must be >= 0, got {p}")
    return float(np.sum(np.power(m.eigenvalues, p)) * m.weight)


@dataclass(frozen=True)
class SymbolPolynomial:
    """Fourier coefficients (k, c_k) of a real trigonometric polynomial, sorted by k."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = dict(self.coefficients)
        for k, c in coeffs.items():
            if abs(coeffs.get(-k, 0j) - complex(c).conjugate()) > HERMITIAN_TOL:
                raise InvalidSpec(f"symbol coefficient c_{-k} is not the conjugate of c_{k}")
        object.__setattr__(self, "coefficients", tuple(sorted((int(k), complex(c)) for k, c in coeffs.items())))

    @property
    def bandwidth(self):
        return max((abs(k) for k, _ in self.coefficients), default=0)

    @property
    def sup_bound(self):
        return sum(abs(c) for _, c in self.coefficients)

    def array(self):
        """Coefficients c_{-B} .. c_B as a dense vector."""
        b = self.bandwidth
        out = np.zeros(2 * b + 1, dtype=complex)
        for k, c in self.coefficients:
            out[k + b] = c
        return out


def symbol_from_toeplitz(spec):
    if spec.kind is not Kind.TOEPLITZ:
        raise InvalidSpec(f"a symbol needs a toeplitz operator, got {spec.kind.value}")
    try:
        return SymbolPolynomial(spec.band)
    except InvalidSpec as e:
        raise NonHermitianCompression(str(e)) from None


def symbol_moment(s, p):
    """Constant Fourier coefficient of f^p."""
    if p < 0:
        raise ValueError(f"moment order must be >= 0, got {p}")
    base = s.array()
    power = np.ones(1, dtype=complex)
    for _ in range(p):
        power = np.convolve(power, base)
    return float(power[len(power) // 2].real)


@dataclass(frozen=True)
class SzegoRow:
    n: int
    p: int
    empirical: float
    reference: float
    gap: float

    def as_row(self):
        return {"n": self.n, "p": self.p, "empirical": self.empirical, "reference": self.reference, "gap": self.gap}


@dataclass(frozen=True)
class SzegoTable:
    rows: tuple
    # p -> gap non-increasing along the n grid
    trends: dict

    def gaps(self, p):
        return {r.n: r.gap for r in self.rows if r.p == p}


def szego_compare(spec, ns, ps, tol=HERMITIAN_TOL):
    symbol = symbol_from_toeplitz(spec)
    references = {p: symbol_moment(symbol, p) for p in ps}
    rows = []
    for n in ns:
        measure = empirical_spectrum(spec, n, tol)
        for p in ps:
            value = moment(measure, p)
            rows.append(SzegoRow(n=n, p=p, empirical=value, reference=references[p], gap=abs(value - references[p])))
        log.debug("szego moments done for n=%d", n)
    trends = {}
    for p in ps:
        gaps = [r.gap for r in rows if r.p == p]
        trends[p] = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    return SzegoTable(rows=tuple(rows), trends=trends)


def fit_rate_constant(table, p, fit_ns, check_n, factor=1.5, atol=1e-10):
    """C = max n*gap(n) over fit_ns, and whether gap(check_n) <= factor*C/check_n (+ atol)."""
    gaps = table.gaps(p)
    missing = [n for n in (*fit_ns, check_n) if n not in gaps]
    if missing:
        raise ValueError(f"table has no rows for p={p} at n={missing}")
    c = max(n * gaps[n] for n in fit_ns)
    return c, gaps[check_n] <= factor * c / check_n + atol
