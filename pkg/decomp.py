"""Block-diagonal plus compact splitting of quasidiagonal operators.

Given ranks b_1 < b_2 < ... of a quasidiagonalizing sequence, the blocks are
(b_{i-1}, b_i] and K collects every entry of T linking two distinct blocks,
which is the telescoped sum of Q_{i+1} T P_{b_i} + P_{b_i} T Q_{i+1}.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from errors import InvalidSpec, NotQuasidiagonalAlongFamily, SelectorOutOfRange, WindowTooSmall
from norms import entry_seminorms, norm_report
from opcore import DEFAULT_MAX_WINDOW, IndexRule, Window, block_family, capture_bound, compress

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12


def select_subsequence(spec, fam, epsilon, search_limit, max_window=DEFAULT_MAX_WINDOW):
    """Greedy n_1 < n_2 < ... with ||[T, P_{n_i}]||_u < epsilon / 2^(i+1)."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    limit = search_limit if fam.length is None else min(search_limit, fam.length)
    chosen = []
    for n in range(1, limit + 1):
        threshold = epsilon / 2 ** (len(chosen) + 2)
        if threshold == 0.0:
            break
        if norm_report(spec, fam, n, max_window).u < threshold:
            chosen.append(n)
            log.debug("admitted n_%d = %d (threshold %g)", len(chosen), n, threshold)
    if not chosen:
        raise NotQuasidiagonalAlongFamily(
            f"no n <= {limit} has ||[T, P_n]||_u < {epsilon / 4!r}"
        )
    return chosen


@dataclass(frozen=True, eq=False)
class Decomposition:
    boundaries: tuple
    K: Window
    B: Window
    epsilon: float
    window_dim: int
    k_norm: float
    off_block_residual: float
    violations: tuple = field(default=())

    @property
    def holds(self):
        return not self.violations


def block_labels(boundaries, N):
    """Block number of each coordinate 1..N; the partial block after b_k gets label k."""
    return np.searchsorted(np.asarray(boundaries, dtype=np.int64), np.arange(1, N + 1), side="left")


def _check_boundaries(boundaries):
    b = [int(x) for x in boundaries]
    if b and b[0] == 0:
        b = b[1:]
    if not b or b[0] < 1 or any(x >= y for x, y in zip(b, b[1:])):
        raise InvalidSpec(f"boundaries must be positive and strictly increasing: {b}")
    return tuple(b)


def halmos_decompose(spec, boundaries, N, epsilon=None, max_window=DEFAULT_MAX_WINDOW):
    """Split compress(spec, N) into B + K along the blocks (b_{i-1}, b_i].

    Violations of the Decomposition invariants are reported on the result,
    not raised; epsilon=None skips the norm claim.
    """
    b = _check_boundaries(boundaries)
    needed = capture_bound(spec, b[-1], max_window=max_window)
    if N < needed:
        raise WindowTooSmall(f"boundary {b[-1]} needs a window of at least {needed}, got {N}")

    t = compress(spec, N).entries
    labels = block_labels(b, N)
    linking = labels[:, None] != labels[None, :]
    k = np.where(linking, t, 0)
    rows, cols = np.nonzero(k)
    k_norm, _, _ = entry_seminorms((rows + 1).tolist(), (cols + 1).tolist(), k[rows, cols])
    bm = t - k

    # the partial block after b_k is excluded from the block-diagonality check
    inner = labels < len(b)
    tested = linking & inner[:, None] & inner[None, :]
    residual = float(np.max(np.abs(bm[tested]), initial=0.0))

    violations = []
    if epsilon is not None and not k_norm < epsilon:
        violations.append(f"||K||_u = {k_norm!r} is not below epsilon = {epsilon!r}")
    if not residual < RESIDUAL_TOL:
        violations.append(f"B links distinct blocks with magnitude {residual!r}")
    for v in violations:
        log.warning("halmos decomposition: %s", v)
    return Decomposition(
        boundaries=b,
        K=Window(k),
        B=Window(bm),
        epsilon=epsilon,
        window_dim=N,
        k_norm=k_norm,
        off_block_residual=residual,
        violations=tuple(violations),
    )


def sparse_family(boundaries, selector):
    """R_n = Q_{k_1} + ... + Q_{k_n} over the blocks of the given boundaries."""
    try:
        sel = IndexRule.parse(selector)
    except InvalidSpec as e:
        raise SelectorOutOfRange(str(e)) from None
    fam = block_family(boundaries, sel)
    count = fam.boundaries.length
    if count is not None and sel.length is not None and sel.values[-1] > count:
        raise SelectorOutOfRange(f"selector reaches block {sel.values[-1]} but only {count} blocks exist")
    return fam
