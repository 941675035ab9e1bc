"""Extended seminorms of captured commutators and Foelner-ratio verdicts.

Because a captured commutator window holds every nonzero entry of [T, P_n],
the operator norm, trace norm and Hilbert-Schmidt norm of the window are the
extended seminorms u, s1, s2 themselves. Denominators of the Foelner ratios
are the exact projection norms rank and sqrt(rank).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import linregress

from errors import NumericalFailure, TooFewSamples
from opcore import DEFAULT_MAX_WINDOW, capture_commutator

log = logging.getLogger(__name__)

# relative accuracy expected of the LAPACK singular values
SVD_RTOL = 1e-12


class Mode(str, Enum):
    U = "u"
    S1 = "s1"
    S2 = "s2"


def singular_values(matrix):
    try:
        return scipy.linalg.svdvals(np.asarray(matrix), check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"singular value computation failed: {e}") from None


def _norms_from_singular_values(sv, frobenius):
    if sv.size == 0:
        return 0.0, 0.0, frobenius
    return float(np.max(sv)), float(np.sum(sv)), frobenius


def seminorm(window, mode):
    """u: largest singular value, s1: their sum, s2: root of the squared entry sum."""
    mode = Mode(mode)
    a = window.entries
    if mode is Mode.S2:
        return float(np.linalg.norm(a))
    if not np.any(a):
        return 0.0
    u, s1, _ = _norms_from_singular_values(singular_values(a), 0.0)
    return u if mode is Mode.U else s1


def _components(rows, cols):
    """Label each entry by the connected component of its row/column pattern."""
    row_ids = {r: k for k, r in enumerate(dict.fromkeys(rows))}
    col_ids = {c: k for k, c in enumerate(dict.fromkeys(cols))}
    r = np.fromiter((row_ids[i] for i in rows), dtype=np.int64, count=len(rows))
    c = np.fromiter((col_ids[j] for j in cols), dtype=np.int64, count=len(cols))
    if len(row_ids) == len(rows) and len(col_ids) == len(cols):
        return None, r, c
    size = len(row_ids) + len(col_ids)
    graph = coo_matrix((np.ones(len(rows)), (r, c + len(row_ids))), shape=(size, size))
    _, labels = connected_components(graph, directed=False)
    return labels[r], r, c


def entry_seminorms(rows, cols, values):
    """(u, s1, s2) of the matrix with the given nonzero entries, one SVD per connected block."""
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        return 0.0, 0.0, 0.0
    s2 = float(np.linalg.norm(values))
    labels, r, c = _components(list(rows), list(cols))
    if labels is None:
        # every row and column holds one entry: the singular values are the moduli
        return _norms_from_singular_values(np.abs(values), s2)
    pieces = []
    for label in np.unique(labels):
        mask = labels == label
        rr, rows_inv = np.unique(r[mask], return_inverse=True)
        cc, cols_inv = np.unique(c[mask], return_inverse=True)
        block = np.zeros((rr.size, cc.size), dtype=complex)
        block[rows_inv, cols_inv] = values[mask]
        pieces.append(np.abs(block).ravel() if block.size == 1 else singular_values(block))
    return _norms_from_singular_values(np.concatenate(pieces), s2)


def captured_seminorms(captured):
    return entry_seminorms(captured.rows, captured.cols, captured.values)


@dataclass(frozen=True)
class NormReport:
    n: int
    rank: int
    u: float
    s1: float
    s2: float
    ratio1: float
    ratio2: float

    def as_row(self):
        return asdict(self)


def norm_report(spec, fam, n, max_window=DEFAULT_MAX_WINDOW):
    captured = capture_commutator(spec, fam, n, max_window)
    u, s1, s2 = captured_seminorms(captured)
    rank = captured.rank
    return NormReport(n=n, rank=rank, u=u, s1=s1, s2=s2, ratio1=s1 / rank, ratio2=s2 / math.sqrt(rank))


def report_sequence(spec, fam, ns, workers=1, max_window=DEFAULT_MAX_WINDOW):
    """One NormReport per n, in the order of ns."""
    ns = list(ns)
    if any(a >= b for a, b in zip(ns, ns[1:])):
        raise ValueError("the n-grid must be strictly increasing")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda n: norm_report(spec, fam, n, max_window), ns))
    return [norm_report(spec, fam, n, max_window) for n in ns]


def propagation_estimates(report, rtol=1e-12):
    """The two bounds every commutator of rank <= 2*rank(P_n) obeys."""
    slack = 1 + rtol
    return {
        "ratio1<=2u": report.ratio1 <= 2 * report.u * slack,
        "ratio1<=sqrt2*ratio2": report.ratio1 <= math.sqrt(2) * report.ratio2 * slack,
    }


# ----------------------------------------------------------------------------
# Verdicts
# ----------------------------------------------------------------------------

class VerdictLabel(str, Enum):
    TENDS_TO_ZERO = "tends_to_zero"
    TENDS_TO_POSITIVE = "tends_to_positive"
    DIVERGES = "diverges"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ClassifyPolicy:
    zero_tol: float = 1e-2
    rel_tol: float = 0.05
    slack: float = 0.10
    tail_fraction: float = 0.25
    min_slope: float = 0.1
    min_samples: int = 8
    flatten_tol: float = 0.05


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    limit: float = None
    evidence: dict = field(default_factory=dict, compare=False)

    def __str__(self):
        if self.label is VerdictLabel.TENDS_TO_POSITIVE:
            return f"{self.label.value}({self.limit!r})"
        return self.label.value


def _tail_slope(xs, ys):
    if len(xs) < 3 or min(ys) <= 0 or min(xs) <= 0 or len(set(xs)) < 2:
        return None
    fit = linregress(np.log(xs), np.log(ys))
    return float(fit.slope)


def _half_slopes(xs, ys):
    """Log-log slopes over the earlier and the later half of the fit window."""
    mid = len(xs) // 2
    return _tail_slope(xs[: mid + 1], ys[: mid + 1]), _tail_slope(xs[mid - 1 :], ys[mid - 1 :])


def _keeps_pace(early, late, tol):
    # c + a*n^s has a slope that fades towards 0 as the floor c takes over
    if early is None or late is None:
        return True
    return early != 0 and late / early >= 1 - tol


def classify(ratios, policy=None, ns=None):
    """Verdict on a finite ratio sequence.

    The tail is the last tail_fraction of the samples. A non-increasing tail
    tends to zero when it sits below zero_tol or when the log-log slope over
    the last half is at most -min_slope; a non-decreasing one diverges when it
    doubles the head maximum or the slope is at least min_slope. The slope
    only counts when the later half of the fit window is at least as steep as
    the earlier half, up to flatten_tol. Otherwise a tail within rel_tol of
    its median tends to that median.
    """
    policy = ClassifyPolicy() if policy is None else policy
    ys = [float(v) for v in ratios]
    if len(ys) < policy.min_samples:
        raise TooFewSamples(f"need at least {policy.min_samples} samples, got {len(ys)}")
    xs = [float(x) for x in ns] if ns is not None else [float(k) for k in range(1, len(ys) + 1)]
    if len(xs) != len(ys):
        raise ValueError("ratios and abscissas differ in length")

    tail_len = max(2, math.ceil(len(ys) * policy.tail_fraction))
    head, tail = ys[:-tail_len], ys[-tail_len:]
    fit_len = max(3, len(ys) // 2)
    slope = _tail_slope(xs[-fit_len:], ys[-fit_len:])
    early, late = _half_slopes(xs[-fit_len:], ys[-fit_len:])
    steady = slope is not None and _keeps_pace(early, late, policy.flatten_tol)
    level = float(np.median(tail))
    evidence = {
        "head_max": max(head),
        "tail_min": min(tail),
        "tail_max": max(tail),
        "tail_median": level,
        "slope": slope,
        "early_slope": early,
        "late_slope": late,
    }

    non_increasing = all(b <= a * (1 + policy.slack) for a, b in zip(tail, tail[1:]))
    non_decreasing = all(b >= a for a, b in zip(tail, tail[1:]))
    if non_increasing and (max(tail) < policy.zero_tol or (steady and slope <= -policy.min_slope)):
        verdict = Verdict(VerdictLabel.TENDS_TO_ZERO, 0.0, evidence)
    elif non_decreasing and (min(tail) > 2 * max(head) or (steady and slope >= policy.min_slope)):
        verdict = Verdict(VerdictLabel.DIVERGES, math.inf, evidence)
    elif level > 0 and all(abs(t - level) <= policy.rel_tol * level for t in tail):
        verdict = Verdict(VerdictLabel.TENDS_TO_POSITIVE, level, evidence)
    else:
        verdict = Verdict(VerdictLabel.INCONCLUSIVE, None, evidence)
    log.debug("classified %d samples as %s (%s)", len(ys), verdict, evidence)
    return verdict


def classify_reports(reports, policy=None):
    """Verdicts for the u, ratio1 and ratio2 columns of a report sequence."""
    ns = [r.n for r in reports]
    return {
        name: classify([getattr(r, name) for r in reports], policy, ns)
        for name in ("u", "ratio1", "ratio2")
    }
