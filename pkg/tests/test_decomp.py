import numpy as np
import pytest

from decomp import block_labels, halmos_decompose, select_subsequence, sparse_family
from errors import NotQuasidiagonalAlongFamily, SelectorOutOfRange, WindowTooSmall
from norms import VerdictLabel, classify, norm_report, report_sequence, seminorm
from opcore import (
    canonical_family,
    compress,
    diagonal,
    example_a,
    family_coordinates,
    hermite_q,
    product,
    sparse_coordinates,
    weighted_shift,
)

COMPACT = weighted_shift("inverse")


def test_select_subsequence_compact_shift():
    ns = select_subsequence(COMPACT, canonical_family(), 0.1, 2048)
    assert ns == [41, 81, 161, 321, 641, 1281]


def test_select_subsequence_diagonal_takes_everything():
    assert select_subsequence(diagonal("linear"), canonical_family(), 0.3, 12) == list(range(1, 13))


def test_select_subsequence_unilateral_shift_fails():
    with pytest.raises(NotQuasidiagonalAlongFamily):
        select_subsequence(weighted_shift("const:1"), canonical_family(), 0.5, 500)


def test_select_subsequence_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        select_subsequence(COMPACT, canonical_family(), 0.0, 10)


def test_block_labels():
    np.testing.assert_array_equal(block_labels([2, 5], 7), [0, 0, 1, 1, 1, 2, 2])


def test_halmos_diagonal_has_no_compact_part():
    d = halmos_decompose(diagonal("sqrt"), [2, 5, 9], 12)
    assert not np.any(d.K.entries)
    np.testing.assert_array_equal(d.B.entries, compress(diagonal("sqrt"), 12).entries)
    assert d.holds


def test_halmos_compact_shift():
    boundaries = select_subsequence(COMPACT, canonical_family(), 0.1, 2048)
    d = halmos_decompose(COMPACT, boundaries, 2048, epsilon=0.1)
    assert d.holds
    assert d.k_norm < 0.1
    assert seminorm(d.K, "u") == pytest.approx(d.k_norm, rel=1e-12)
    assert d.off_block_residual < 1e-12
    np.testing.assert_allclose(d.B.entries + d.K.entries, compress(COMPACT, 2048).entries, rtol=0, atol=1e-14)
    bound = sum(2 * norm_report(COMPACT, canonical_family(), b).u for b in boundaries)
    assert d.k_norm <= bound


def test_halmos_position_reports_violation():
    small = halmos_decompose(hermite_q(), list(range(1, 20)), 20, epsilon=1.0)
    large = halmos_decompose(hermite_q(), list(range(1, 40)), 40, epsilon=1.0)
    assert not small.holds and not large.holds
    assert large.k_norm > small.k_norm > 1.0
    off = compress(hermite_q(), 20).entries.copy()
    np.fill_diagonal(off, 0)
    np.testing.assert_allclose(small.K.entries, off)


def test_halmos_window_too_small():
    with pytest.raises(WindowTooSmall):
        halmos_decompose(COMPACT, [4, 8], 8)


def test_sparse_family_unit_blocks():
    fam = sparse_family([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10], "2^n")
    assert list(family_coordinates(fam, 1)) == [2]
    assert list(family_coordinates(fam, 3)) == [2, 4, 8]
    assert fam.length == 3


def test_sparse_family_selected_blocks():
    fam = sparse_family([0, 3, 5, 9], [1, 3])
    assert family_coordinates(fam, 2).intervals == ((1, 3), (6, 9))


@pytest.mark.parametrize("selector", [[2, 1], [1, 5], "foo"])
def test_sparse_family_bad_selector(selector):
    with pytest.raises(SelectorOutOfRange):
        sparse_family([0, 3, 5, 9], selector)


@pytest.mark.parametrize("indices", ["2^n", "n^2"])
def test_compact_shift_sparse_foelner(indices):
    fam = sparse_coordinates(indices)
    ranks = [2**k for k in range(1, 11)] + [1100, 1200]
    reports = report_sequence(COMPACT, fam, ranks)
    assert reports[-1].rank >= 1024 and reports[-1].ratio2 < 0.05
    assert classify([r.ratio2 for r in reports], ns=ranks).label is VerdictLabel.TENDS_TO_ZERO


def test_compact_shift_halmos_blocks_are_sparse_foelner():
    boundaries = select_subsequence(COMPACT, canonical_family(), 0.1, 20_000)
    fam = sparse_family(boundaries, "n")
    reports = report_sequence(COMPACT, fam, range(1, fam.length + 1))
    assert len(reports) >= 8
    assert classify([r.ratio2 for r in reports], ns=[r.rank for r in reports]).label is VerdictLabel.TENDS_TO_ZERO
    odd = sparse_family(boundaries, "2*n-1")
    last = report_sequence(COMPACT, odd, range(1, odd.length + 1))
    assert all(b.ratio2 < a.ratio2 for a, b in zip(last, last[1:]))


def test_example_a_halmos_blocks_reduce_exactly():
    boundaries = select_subsequence(example_a(), canonical_family(), 0.5, 40)
    assert boundaries == list(range(2, 41, 2))
    fam = sparse_family(boundaries, "2*n-1")
    reports = report_sequence(example_a(), fam, range(1, fam.length + 1))
    assert all(r.ratio2 == 0 for r in reports)
    assert classify([r.ratio2 for r in reports]).label is VerdictLabel.TENDS_TO_ZERO
    d = halmos_decompose(example_a(), boundaries, 41, epsilon=0.5)
    assert d.k_norm == 0 and d.holds


def test_example_a_and_its_square():
    a = example_a()
    for j in range(1, 30):
        assert norm_report(a, canonical_family(), 2 * j - 1).u == pytest.approx(1 / (2 * j - 1))
        assert norm_report(a, canonical_family(), 2 * j).u == 0
    square = product(a, a)
    odd = [2**k - 1 for k in range(2, 14)]
    us = [norm_report(square, canonical_family(), n).u for n in odd]
    for n, u in zip(odd, us):
        assert u == pytest.approx(((n + 1) ** 2 + n**2) / n, rel=1e-12)
    assert classify(us, ns=odd).label is VerdictLabel.DIVERGES
