"""Quasidiagonalizing sequences for Hermitian and normal windows.

berg_sequence grows P_1 <= P_2 <= ... from spectral pieces of the basis
vectors omega_1, omega_2, ... taken over ever finer interval partitions;
normal_to_selfadjoint trades a normal window for a Hermitian one with the
same invariant subspaces; unbounded_combine interleaves per-interval
sequences along anti-diagonals.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from errors import NonOrthogonalRanges, NotHermitian, NotNormal, NumericalFailure, RankStall
from opcore import Window, explicit_family, projection_window

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
NORMAL_TOL = 1e-10
BOUNDARY_TOL = 1e-12
DROP_THRESHOLD = 1e-10
OVERLAP_TOL = 1e-10
# cells finer than this are far below float resolution
MAX_LEVEL = 900


# ----------------------------------------------------------------------------
# Partitions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralPartition:
    """[-M, M] cut into equal half-open cells, the last one closed."""

    M: float
    level: int
    epsilon: float

    @property
    def count(self):
        return max(1, math.ceil(2 * self.M * 2 ** self.level / self.epsilon))

    @property
    def length(self):
        return 2 * self.M / self.count

    @property
    def max_length(self):
        return math.ldexp(self.epsilon, -self.level)

    @property
    def intervals(self):
        edges = [-self.M + k * self.length for k in range(self.count)] + [self.M]
        return list(zip(edges, edges[1:]))

    def cell_indices(self, values):
        """Cell of each value; values within BOUNDARY_TOL of an edge go to the cell it opens."""
        t = (np.asarray(values, dtype=float) + self.M) / self.length
        nearest = np.round(t)
        t = np.where(np.abs(t - nearest) * self.length <= BOUNDARY_TOL, nearest, t)
        # float labels: fine levels have more cells than int64 holds
        return np.clip(np.floor(t), 0.0, float(self.count - 1))


def dyadic_partition(M, n, epsilon):
    if not M > 0 or not epsilon > 0:
        raise ValueError(f"need M > 0 and epsilon > 0, got M={M!r}, epsilon={epsilon!r}")
    return SpectralPartition(M=float(M), level=int(n), epsilon=float(epsilon))


# ----------------------------------------------------------------------------
# Hermitian construction
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BergResult:
    projections: tuple
    block_ranks: tuple
    commutator_norms: tuple
    perturbation_norm: float
    basis: np.ndarray
    epsilon: float
    # orthonormal columns carrying the reduced coordinates into the full window
    embedding: np.ndarray = field(default=None)

    @property
    def rank(self):
        return self.basis.shape[1]

    def increments(self):
        """Column blocks of the basis spanning Q_1, Q_2, ... in full coordinates."""
        v = self.basis if self.embedding is None else self.embedding @ self.basis
        edges = np.cumsum((0,) + self.block_ranks)
        return [v[:, lo:hi] for lo, hi in zip(edges, edges[1:])]


def _hermitian_entries(window, tol=HERMITIAN_TOL):
    a = window.entries
    gap = float(np.max(np.abs(a - a.conj().T)))
    if gap > tol:
        raise NotHermitian(f"window deviates from its adjoint by {gap!r}")
    return a


def _eigh(a):
    try:
        return scipy.linalg.eigh(a, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"eigendecomposition failed: {e}") from None


def _spectral_norm(a):
    return float(np.max(scipy.linalg.svdvals(a), initial=0.0))


def _order(basis_order, N):
    if basis_order is None:
        return list(range(N))
    order = [int(k) - 1 for k in basis_order]
    if sorted(order) != list(range(N)):
        raise ValueError(f"basis_order must be a permutation of 1..{N}")
    return order


def _step_vectors(a, v, omega, partition, drop_threshold=DROP_THRESHOLD):
    """Normalized E_{A_n}(cell) omega for every cell, inside the complement of range(v)."""
    n = a.shape[0]
    w = scipy.linalg.null_space(v.conj().T) if v.shape[1] else np.eye(n, dtype=complex)
    reduced = w.conj().T @ a @ w
    vals, vecs = _eigh((reduced + reduced.conj().T) / 2)
    coeffs = vecs.conj().T @ (w.conj().T @ omega)
    cells = partition.cell_indices(vals)
    found = []
    for cell in np.unique(cells):
        mask = cells == cell
        y = w @ (vecs[:, mask] @ coeffs[mask])
        # orthogonalize against range(v) and earlier pieces
        for basis in (v, *found):
            y = y - basis @ (basis.conj().T @ y)
        norm = np.linalg.norm(y)
        if norm > drop_threshold:
            found.append((y / norm)[:, None])
    return np.hstack(found) if found else np.zeros((n, 0), dtype=complex)


def _off_block_norm(a, v, ranks):
    b = v.conj().T @ a @ v
    edges = np.cumsum((0,) + tuple(ranks))
    for lo, hi in zip(edges, edges[1:]):
        b[lo:hi, lo:hi] = 0
    return _spectral_norm(b)


def berg_sequence(A, basis_order=None, epsilon=0.1, drop_threshold=DROP_THRESHOLD, hermitian_tol=HERMITIAN_TOL):
    """Increasing projections P_n with ||A - sum Q_n A Q_n||_u < epsilon.

    Step n refines by cells of length at most epsilon / 2^n.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    a = _hermitian_entries(A, hermitian_tol)
    N = a.shape[0]
    M = _spectral_norm(a) or 1.0
    order = _order(basis_order, N)

    v = np.zeros((N, 0), dtype=complex)
    projections, ranks, norms = [], [], []
    for step, k in enumerate(order, start=1):
        if v.shape[1] == N:
            break
        omega = np.zeros(N, dtype=complex)
        omega[k] = 1.0
        q = _step_vectors(a, v, omega, dyadic_partition(M, min(step, MAX_LEVEL), epsilon), drop_threshold)
        v = np.hstack([v, q])
        p = v @ v.conj().T
        projections.append(Window(p))
        ranks.append(q.shape[1])
        norms.append(_spectral_norm(a @ v - v @ (v.conj().T @ a @ v)))
        log.debug("berg step %d: omega_%d adds rank %d (total %d)", step, k + 1, q.shape[1], v.shape[1])
    if v.shape[1] < N:
        raise RankStall(f"projections stopped at rank {v.shape[1]} of {N}")

    perturbation = _off_block_norm(a, v, ranks)
    return BergResult(
        projections=tuple(projections),
        block_ranks=tuple(ranks),
        commutator_norms=tuple(norms),
        perturbation_norm=perturbation,
        basis=v,
        epsilon=epsilon,
    )


def random_hermitian(size, seed):
    """Seeded complex Hermitian window scaled to spectral norm 1."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    h = (x + x.conj().T) / 2
    return Window(h / _spectral_norm(h))


def window_commutator_norms(A, fam, N=None):
    """||[A, P_k]||_u for every member of a projection family, A given as a window."""
    a = A.entries
    N = a.shape[0] if N is None else N
    out = []
    for k in range(1, fam.length + 1):
        p = projection_window(fam, k, N).entries
        out.append(_spectral_norm(a @ p - p @ a))
    return out


# ----------------------------------------------------------------------------
# Normal windows
# ----------------------------------------------------------------------------

def _distinct_groups(eigenvalues, tol):
    """Label eigenvalues so that values closer than tol share a label."""
    labels = -np.ones(len(eigenvalues), dtype=np.int64)
    reps = []
    for i, z in enumerate(eigenvalues):
        for label, r in enumerate(reps):
            if abs(z - r) <= tol:
                labels[i] = label
                break
        else:
            labels[i] = len(reps)
            reps.append(z)
    return labels


def normal_to_selfadjoint(Nw, epsilon=1.0, max_levels=200):
    """A_N = sum_k 3^-k (2 E_k - 1) over the distinct cell projections E_k of all levels.

    Level n uses square cells of diameter epsilon / 2^n; refinement stops at the
    first level whose cells separate every pair of distinct eigenvalues.
    """
    a = Nw.entries
    defect = float(np.max(np.abs(a @ a.conj().T - a.conj().T @ a)))
    if defect >= NORMAL_TOL:
        raise NotNormal(f"||N N* - N* N||_max = {defect!r}")
    try:
        t, z = scipy.linalg.schur(a, output="complex")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Schur decomposition failed: {e}") from None
    eig = np.diag(t)
    groups = _distinct_groups(eig, 1e-10 * max(1.0, float(np.max(np.abs(eig)))))

    sign_sum = np.zeros(len(eig))
    projections = []
    seen = set()
    k = 0
    for level in range(1, max_levels + 1):
        side = epsilon / (2 ** level * math.sqrt(2))
        cells = [(math.floor(x.real / side), math.floor(x.imag / side)) for x in eig]
        separated = True
        for cell in sorted(set(cells)):
            members = np.array([c == cell for c in cells])
            if len(set(groups[members])) > 1:
                separated = False
            key = tuple(np.flatnonzero(members))
            if key in seen:
                continue
            seen.add(key)
            k += 1
            zc = z[:, members]
            projections.append(Window(zc @ zc.conj().T))
            sign_sum += 3.0 ** -k * np.where(members, 1.0, -1.0)
        if separated:
            log.debug("cells separate the spectrum at level %d (%d projections)", level, k)
            break
    else:
        raise NumericalFailure(f"eigenvalues not separated after {max_levels} levels")

    h = (z * sign_sum) @ z.conj().T
    return Window((h + h.conj().T) / 2), projections


# ----------------------------------------------------------------------------
# Unbounded combination
# ----------------------------------------------------------------------------

def split_by_intervals(A, edges, epsilon_rule=None):
    """One BergResult per spectral interval [e_i, e_{i+1}) of a Hermitian window.

    The n-th non-empty interval gets epsilon_rule(n), 2^-n by default.
    """
    epsilon_rule = epsilon_rule or (lambda n: 2.0 ** -n)
    a = _hermitian_entries(A)
    vals, vecs = _eigh(a)
    edges = [float(e) for e in edges]
    if any(x >= y for x, y in zip(edges, edges[1:])) or len(edges) < 2:
        raise ValueError(f"interval edges must be strictly increasing: {edges}")
    if vals[0] < edges[0] - BOUNDARY_TOL or vals[-1] > edges[-1] + BOUNDARY_TOL:
        raise ValueError(f"spectrum [{vals[0]!r}, {vals[-1]!r}] leaves the edges {edges[0]!r}..{edges[-1]!r}")
    cells = np.clip(np.searchsorted(edges, vals + BOUNDARY_TOL, side="right") - 1, 0, len(edges) - 2)

    results = []
    for cell in range(len(edges) - 1):
        mask = cells == cell
        if not np.any(mask):
            continue
        projector = vecs[:, mask] @ vecs[:, mask].conj().T
        u = scipy.linalg.orth(projector)
        reduced = u.conj().T @ a @ u
        part = berg_sequence(Window((reduced + reduced.conj().T) / 2), epsilon=epsilon_rule(len(results) + 1))
        results.append(replace(part, embedding=u))
    return results


def unbounded_combine(per_interval, schedule="diagonal"):
    """E_{k-1} = sum over n+m=k of the m-th increment of interval n; P_k = E_1 + ... + E_k."""
    if schedule != "diagonal":
        raise ValueError(f"unknown schedule {schedule!r}")
    if not per_interval:
        raise ValueError("nothing to combine")
    pieces = [r.increments() for r in per_interval]
    dims = {p[0].shape[0] for p in pieces if p}
    if len(dims) != 1:
        raise NonOrthogonalRanges(f"per-interval results live in different dimensions {sorted(dims)}")

    ranges = [np.hstack(p) for p in pieces]
    for i in range(len(ranges)):
        for j in range(i + 1, len(ranges)):
            overlap = float(np.max(np.abs(ranges[i].conj().T @ ranges[j]), initial=0.0))
            if overlap > OVERLAP_TOL:
                raise NonOrthogonalRanges(f"ranges of intervals {i + 1} and {j + 1} overlap by {overlap!r}")

    last = max(n + len(p) for n, p in enumerate(pieces, start=1))
    columns, bases = [], []
    for k in range(2, last + 1):
        for n, p in enumerate(pieces, start=1):
            m = k - n
            if 1 <= m <= len(p):
                columns.append(p[m - 1])
        current = np.hstack(columns)
        if current.shape[1]:
            bases.append(current)
    log.debug("combined %d interval sequences into %d projections", len(pieces), len(bases))
    return explicit_family(bases)
