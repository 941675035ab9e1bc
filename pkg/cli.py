"""Command line: python main.py <command> [--spec FILE] [options].

Every command writes one report: '# key: value' metadata lines followed by CSV
(or, for weyl-represent, a matrix in the berg input format). Exit codes are 0
on success, 2 for rejected input and 3 when a computation fails.
"""

import argparse
import csv
import io
import logging
import re
import sys
from datetime import datetime, timezone

import berg
import decomp
import norms
import szego
import weyl
from errors import InvalidSpec, QdError
from opcore import Window, canonical_family, capture_bound, family_coordinates
from settings import SETTINGS_FILE, load_settings
from specfile import SpecFile, format_matrix, load_matrix, load_spec

log = logging.getLogger(__name__)

TOOL = "qdfolner"
VERSION = "0.1.0"

COMMANDS = ("norms", "classify", "halmos", "sparse", "berg", "szego", "weyl-amenability", "weyl-represent")
NORM_COLUMNS = ["n", "rank", "u", "s1", "s2", "ratio1", "ratio2"]


# ----------------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------------

def _cell(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Report:
    def __init__(self, command, columns=None):
        self.command = command
        self.columns = columns or []
        self.rows = []
        self.meta = {}
        self.body = None

    def add(self, row):
        self.rows.append(row)

    def render(self, spec_sha256="", timestamp=True):
        out = io.StringIO()
        header = {"tool": TOOL, "version": VERSION, "command": self.command, "spec-sha256": spec_sha256 or "none"}
        if timestamp:
            header["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        for key, value in {**header, **self.meta}.items():
            out.write(f"# {key}: {_cell(value)}\n")
        if self.body is not None:
            out.write(self.body)
            return out.getvalue()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(row[c]) for c in self.columns])
        return out.getvalue()


# ----------------------------------------------------------------------------
# Argument helpers
# ----------------------------------------------------------------------------

_INT_LIST = re.compile(r"^\d+(\s*,\s*\d+)*$")


def _int_list(text):
    if isinstance(text, list):
        return [int(v) for v in text]
    if not _INT_LIST.match(str(text).strip()):
        raise InvalidSpec(f"expected a comma separated list of integers, got {text!r}")
    return [int(v) for v in str(text).split(",")]


def _rule_arg(value):
    """Lists stay lists; '0,3,5,9' becomes a list; anything else is a rule string."""
    if isinstance(value, list):
        return value
    text = str(value).strip()
    return _int_list(text) if _INT_LIST.match(text) else text


def _param(args, experiment, name, default=None):
    value = getattr(args, name, None)
    if value is None:
        value = experiment.get(name, default)
    return value


def _n_grid(args, experiment):
    ns = _param(args, experiment, "ns")
    if ns is not None:
        return _int_list(ns)
    end = _param(args, experiment, "n_end")
    if end is None:
        raise InvalidSpec("no n-grid: give --ns or --n-end (with --n-start, --n-step or --n-geometric)")
    start = int(_param(args, experiment, "n_start", 1))
    base = _param(args, experiment, "n_geometric")
    if base is not None:
        base = int(base)
        if base < 2:
            raise InvalidSpec("--n-geometric needs a base >= 2")
        grid, n = [], start
        while n <= end:
            grid.append(n)
            n *= base
        return grid
    step = int(_param(args, experiment, "n_step", 1))
    if start < 1 or step < 1:
        raise InvalidSpec("the n-grid starts at n >= 1 with a positive step")
    return list(range(start, int(end) + 1, step))


def _spec(args, required=True):
    if args.spec is None:
        if required:
            raise InvalidSpec(f"{args.command} needs --spec FILE")
        return SpecFile()
    spec = load_spec(args.spec)
    if required and spec.operator is None:
        raise InvalidSpec(f"{args.spec} has no 'operator'")
    return spec


def _norm_rows(report, rows):
    for r in rows:
        report.add(r.as_row())


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_norms(args, settings):
    spec = _spec(args)
    ns = _n_grid(args, spec.experiment)
    rows = norms.report_sequence(spec.operator, spec.projection, ns, settings.workers, settings.max_window)
    report = Report("norms", NORM_COLUMNS)
    _norm_rows(report, rows)
    return report, spec


def cmd_classify(args, settings):
    spec = _spec(args)
    ns = _n_grid(args, spec.experiment)
    rows = norms.report_sequence(spec.operator, spec.projection, ns, settings.workers, settings.max_window)
    verdicts = norms.classify_reports(rows, settings.policy())
    report = Report("classify", NORM_COLUMNS)
    for name, verdict in verdicts.items():
        report.meta[f"verdict-{name}"] = str(verdict)
    _norm_rows(report, rows)
    return report, spec


def _interval_boundary(fam, n):
    coords = family_coordinates(fam, n)
    if coords is None or len(coords.intervals) != 1 or coords.intervals[0][0] != 1:
        raise InvalidSpec("halmos needs a nested family of leading intervals (canonical or blocks without selector)")
    return coords.max_index


def cmd_halmos(args, settings):
    spec = _spec(args)
    exp = spec.experiment
    epsilon = float(_param(args, exp, "epsilon", 0.1))
    limit = int(_param(args, exp, "search_limit", 10_000))
    ns = decomp.select_subsequence(spec.operator, spec.projection, epsilon, limit, settings.max_window)
    boundaries = [_interval_boundary(spec.projection, n) for n in ns]
    window = _param(args, exp, "window")
    if window is None:
        window = capture_bound(spec.operator, boundaries[-1], max_window=settings.max_window)
    result = decomp.halmos_decompose(spec.operator, boundaries, int(window), epsilon, settings.max_window)

    report = Report("halmos", ["i", "n", "boundary", "u", "threshold"])
    report.meta.update(
        epsilon=epsilon,
        window=result.window_dim,
        k_norm=result.k_norm,
        off_block_residual=result.off_block_residual,
        holds=result.holds,
    )
    for i, (n, b) in enumerate(zip(ns, boundaries), start=1):
        u = norms.norm_report(spec.operator, spec.projection, n, settings.max_window).u
        report.add({"i": i, "n": n, "boundary": b, "u": u, "threshold": epsilon / 2 ** (i + 1)})
    return report, spec


def cmd_sparse(args, settings):
    spec = _spec(args)
    exp = spec.experiment
    boundaries = _param(args, exp, "boundaries")
    if boundaries is None:
        epsilon = float(_param(args, exp, "epsilon", 0.1))
        limit = int(_param(args, exp, "search_limit", 10_000))
        boundaries = decomp.select_subsequence(spec.operator, canonical_family(), epsilon, limit, settings.max_window)
    selector = _param(args, exp, "selector", "n")
    fam = decomp.sparse_family(_rule_arg(boundaries), _rule_arg(selector))
    count = fam.length
    end = _param(args, exp, "n_end")
    if count is None and end is None:
        raise InvalidSpec("an infinite sparse family needs --n-end")
    last = count if end is None else (int(end) if count is None else min(count, int(end)))
    rows = norms.report_sequence(spec.operator, fam, range(1, last + 1), settings.workers, settings.max_window)

    report = Report("sparse", NORM_COLUMNS)
    report.meta["selector"] = fam.selector.text()
    policy = settings.policy()
    for name in ("ratio1", "ratio2"):
        values = [getattr(r, name) for r in rows]
        if len(values) >= policy.min_samples:
            report.meta[f"verdict-{name}"] = str(norms.classify(values, policy, [r.rank for r in rows]))
        else:
            report.meta[f"verdict-{name}"] = f"not enough samples ({len(values)})"
    _norm_rows(report, rows)
    return report, spec


def cmd_berg(args, settings):
    spec = _spec(args, required=False)
    exp = spec.experiment
    epsilon = float(_param(args, exp, "epsilon", 0.05))
    matrix = _param(args, exp, "matrix")
    if matrix is not None:
        window = Window(load_matrix(matrix))
    else:
        window = berg.random_hermitian(int(_param(args, exp, "size", 128)), int(_param(args, exp, "seed", 0)))
    order = _param(args, exp, "order")
    order = _int_list(order) if order is not None else None
    result = berg.berg_sequence(window, order, epsilon, settings.drop_threshold, settings.berg_hermitian_tol)

    report = Report("berg", ["step", "omega", "block_rank", "rank", "commutator_norm"])
    report.meta.update(
        dimension=window.dim,
        epsilon=epsilon,
        perturbation_norm=result.perturbation_norm,
        final_rank=result.rank,
    )
    omegas = order or list(range(1, window.dim + 1))
    total = 0
    for step, (rank, norm) in enumerate(zip(result.block_ranks, result.commutator_norms), start=1):
        total += rank
        report.add({"step": step, "omega": omegas[step - 1], "block_rank": rank, "rank": total, "commutator_norm": norm})
    return report, spec


def cmd_szego(args, settings):
    spec = _spec(args)
    exp = spec.experiment
    ns = _int_list(_param(args, exp, "ns", "10,100,1000"))
    ps = _int_list(_param(args, exp, "ps", "1,2,3,4"))
    fit_ns = _param(args, exp, "fit_ns")
    check_n = _param(args, exp, "check_n")
    all_ns = sorted(set(ns) | set(_int_list(fit_ns) if fit_ns else []) | ({int(check_n)} if check_n else set()))
    table = szego.szego_compare(spec.operator, all_ns, ps, settings.hermitian_tol)

    report = Report("szego", ["n", "p", "empirical", "reference", "gap"])
    for p, flag in table.trends.items():
        report.meta[f"trend-p{p}"] = "non-increasing" if flag else "mixed"
    if fit_ns and check_n:
        for p in ps:
            c, ok = szego.fit_rate_constant(table, p, _int_list(fit_ns), int(check_n))
            report.meta[f"rate-p{p}"] = f"C={c!r} validated={str(ok).lower()}"
    for row in table.rows:
        report.add(row.as_row())
    return report, spec


def cmd_weyl_amenability(args, settings):
    spec = _spec(args, required=False)
    exp = spec.experiment
    texts = _param(args, exp, "elements")
    if not texts:
        raise InvalidSpec("weyl-amenability needs --elements")
    elements = [weyl.parse_element(t) for t in texts]
    epsilon = float(_param(args, exp, "epsilon", 1.0))
    n, rows = weyl.amenability_witness(elements, epsilon)

    report = Report("weyl-amenability", ["element", "n", "dim_v", "dim_sum", "ratio"])
    report.meta.update(
        epsilon=epsilon,
        witness=n,
        bound=weyl.witness_bound(max(x.degree for x in elements), epsilon),
    )
    for row in rows:
        report.add(row.as_row())
    return report, spec


def cmd_weyl_represent(args, settings):
    spec = _spec(args, required=False)
    exp = spec.experiment
    text = _param(args, exp, "element")
    if text is None:
        raise InvalidSpec("weyl-represent needs --element")
    x = weyl.parse_element(text)
    N = int(_param(args, exp, "window", 8))
    window = weyl.represent(x, N)

    report = Report("weyl-represent")
    report.meta.update(element=weyl.format_element(x), window=N)
    report.body = format_matrix(window.entries)
    return report, spec


HANDLERS = {
    "norms": cmd_norms,
    "classify": cmd_classify,
    "halmos": cmd_halmos,
    "sparse": cmd_sparse,
    "berg": cmd_berg,
    "szego": cmd_szego,
    "weyl-amenability": cmd_weyl_amenability,
    "weyl-represent": cmd_weyl_represent,
}


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def _common(p):
    p.add_argument("--spec", help="JSON spec file")
    p.add_argument("--out", help="report file (default: standard output)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line")
    p.add_argument("--settings", default=SETTINGS_FILE, help="settings file")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on standard error")


def _grid_flags(p):
    p.add_argument("--n-start", dest="n_start", type=int)
    p.add_argument("--n-end", dest="n_end", type=int)
    p.add_argument("--n-step", dest="n_step", type=int)
    p.add_argument("--n-geometric", dest="n_geometric", type=int, metavar="BASE")
    p.add_argument("--ns", help="explicit grid, e.g. 10,100,1000")


def build_parser():
    parser = argparse.ArgumentParser(prog=TOOL, description="Quasidiagonal and Foelner approximation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("norms", "classify"):
        p = sub.add_parser(name)
        _common(p)
        _grid_flags(p)

    p = sub.add_parser("halmos")
    _common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--search-limit", dest="search_limit", type=int)
    p.add_argument("--window", type=int)

    p = sub.add_parser("sparse")
    _common(p)
    p.add_argument("--boundaries", help="list like 0,3,5,9 or a rule like n")
    p.add_argument("--selector", help="list like 1,3 or a rule like 2^n")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--search-limit", dest="search_limit", type=int)
    p.add_argument("--n-end", dest="n_end", type=int)

    p = sub.add_parser("berg")
    _common(p)
    p.add_argument("--matrix", help="matrix file: a line N, then N rows of entries like 1-2i")
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--order", help="basis order, e.g. 2,1,3")

    p = sub.add_parser("szego")
    _common(p)
    p.add_argument("--ns")
    p.add_argument("--ps")
    p.add_argument("--fit-ns", dest="fit_ns")
    p.add_argument("--check-n", dest="check_n", type=int)

    p = sub.add_parser("weyl-amenability")
    _common(p)
    p.add_argument("--elements", nargs="+")
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("weyl-represent")
    _common(p)
    p.add_argument("--element")
    p.add_argument("--window", type=int)
    return parser


def _configure_logging(settings, verbose):
    level = logging.DEBUG if verbose else getattr(logging, str(settings.log_level).upper(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    settings = load_settings(args.settings)
    _configure_logging(settings, args.verbose)
    try:
        report, spec = HANDLERS[args.command](args, settings)
        text = report.render(spec.sha256, timestamp=not args.no_timestamp)
    except QdError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        # bad values that passed the parser, e.g. a non-positive epsilon
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return 0
