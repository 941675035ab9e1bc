"""JSON spec files: strict validation, loading and re-serialization.

A spec file holds {"operator": ..., "projection": ..., "experiment": ...};
see README.md for the schema. Unknown keys anywhere are rejected.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from errors import InvalidSpec
from opcore import (
    FamilyKind,
    IndexRule,
    Kind,
    OperatorSpec,
    WeightFormula,
    block_family,
    canonical_family,
    sparse_coordinates,
)

log = logging.getLogger(__name__)

TOP_KEYS = {"operator", "projection", "experiment"}
EXPERIMENT_KEYS = {
    "n_start", "n_end", "n_step", "n_geometric", "ns",
    "epsilon", "search_limit", "window", "boundaries", "selector",
    "ps", "fit_ns", "check_n",
    "elements", "element",
    "seed", "size", "matrix", "order",
}

OPERATOR_KEYS = {
    Kind.WEIGHTED_SHIFT: {"weight"},
    Kind.ADJOINT_WEIGHTED_SHIFT: {"weight"},
    Kind.DIAGONAL: {"weight"},
    Kind.DILATION_SHIFT: {"weight"},
    Kind.EXAMPLE_A: set(),
    Kind.TOEPLITZ: {"band"},
    Kind.HERMITE_Q: set(),
    Kind.HERMITE_P: set(),
    Kind.CREATION: set(),
    Kind.ANNIHILATION: set(),
    Kind.SUM: {"children"},
    Kind.SCALE: {"factor", "child"},
    Kind.PRODUCT: {"children"},
}


def _complex(value, where):
    if isinstance(value, bool):
        raise InvalidSpec(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise InvalidSpec(f"{where}: cannot read {value!r} as a complex number")


def _complex_json(z):
    z = complex(z)
    if z.imag == 0:
        return z.real
    return [z.real, z.imag]


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise InvalidSpec(f"{where}: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - set(allowed)
    if unknown:
        raise InvalidSpec(f"{where}: unknown field(s) {sorted(unknown)}")


def operator_from_json(doc, where="operator"):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InvalidSpec(f"{where}: needs a 'kind'")
    try:
        kind = Kind(doc["kind"])
    except ValueError:
        raise InvalidSpec(f"{where}: unknown operator kind {doc['kind']!r}") from None
    _check_keys(doc, OPERATOR_KEYS[kind] | {"kind"}, where)

    if kind in (Kind.WEIGHTED_SHIFT, Kind.ADJOINT_WEIGHTED_SHIFT, Kind.DIAGONAL, Kind.DILATION_SHIFT):
        if "weight" not in doc and kind is not Kind.DILATION_SHIFT:
            raise InvalidSpec(f"{where}: {kind.value} needs a 'weight'")
        return OperatorSpec(kind, weight=WeightFormula.parse(doc.get("weight", "sqrt")))
    if kind is Kind.TOEPLITZ:
        band = doc.get("band")
        if not isinstance(band, dict) or not band:
            raise InvalidSpec(f"{where}: toeplitz needs a non-empty 'band' object")
        items = []
        for key, value in band.items():
            try:
                offset = int(key)
            except ValueError:
                raise InvalidSpec(f"{where}.band: offset {key!r} is not an integer") from None
            items.append((offset, _complex(value, f"{where}.band[{key}]")))
        return OperatorSpec(kind, band=tuple(sorted(items)))
    if kind is Kind.SCALE:
        if "child" not in doc:
            raise InvalidSpec(f"{where}: scale needs a 'child'")
        factor = _complex(doc.get("factor", 1.0), f"{where}.factor")
        return OperatorSpec(kind, factor=factor, children=(operator_from_json(doc["child"], f"{where}.child"),))
    if kind in (Kind.SUM, Kind.PRODUCT):
        children = doc.get("children")
        if not isinstance(children, list) or not children:
            raise InvalidSpec(f"{where}: {kind.value} needs a non-empty 'children' list")
        return OperatorSpec(kind, children=tuple(operator_from_json(c, f"{where}.children[{k}]") for k, c in enumerate(children)))
    return OperatorSpec(kind)


def operator_to_json(spec):
    doc = {"kind": spec.kind.value}
    if spec.weight is not None:
        doc["weight"] = spec.weight.text()
    if spec.kind is Kind.TOEPLITZ:
        doc["band"] = {str(k): _complex_json(c) for k, c in spec.band}
    if spec.kind is Kind.SCALE:
        doc["factor"] = _complex_json(spec.factor)
        doc["child"] = operator_to_json(spec.children[0])
    if spec.kind in (Kind.SUM, Kind.PRODUCT):
        doc["children"] = [operator_to_json(c) for c in spec.children]
    return doc


def _rule(value, where):
    if isinstance(value, bool) or not isinstance(value, (str, list)):
        raise InvalidSpec(f"{where}: expected a rule string or an index list, got {value!r}")
    if isinstance(value, list) and not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise InvalidSpec(f"{where}: index lists hold integers only")
    return value


def family_from_json(doc, where="projection"):
    if doc is None:
        return canonical_family()
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InvalidSpec(f"{where}: needs a 'kind'")
    kind = doc["kind"]
    if kind == FamilyKind.CANONICAL.value:
        _check_keys(doc, {"kind"}, where)
        return canonical_family()
    if kind == FamilyKind.SPARSE.value:
        _check_keys(doc, {"kind", "indices"}, where)
        if "indices" not in doc:
            raise InvalidSpec(f"{where}: sparse needs 'indices'")
        return sparse_coordinates(_rule(doc["indices"], f"{where}.indices"))
    if kind == FamilyKind.BLOCKS.value:
        _check_keys(doc, {"kind", "boundaries", "selector"}, where)
        if "boundaries" not in doc:
            raise InvalidSpec(f"{where}: blocks needs 'boundaries'")
        selector = doc.get("selector")
        if selector is not None:
            selector = _rule(selector, f"{where}.selector")
        return block_family(_rule(doc["boundaries"], f"{where}.boundaries"), selector)
    raise InvalidSpec(f"{where}: unknown projection kind {kind!r} (explicit families are built in code)")


def family_to_json(fam):
    if fam.kind is FamilyKind.CANONICAL:
        return {"kind": "canonical"}
    if fam.kind is FamilyKind.SPARSE:
        return {"kind": "sparse", "indices": fam.indices.text()}
    if fam.kind is FamilyKind.BLOCKS:
        doc = {"kind": "blocks", "boundaries": fam.boundaries.text()}
        if fam.selector is not None:
            doc["selector"] = fam.selector.text()
        return doc
    raise InvalidSpec("explicit families have no JSON form")


def _experiment(doc):
    if doc is None:
        return {}
    _check_keys(doc, EXPERIMENT_KEYS, "experiment")
    if "elements" in doc:
        from weyl import parse_element

        if not isinstance(doc["elements"], list) or not doc["elements"]:
            raise InvalidSpec("experiment.elements: expected a non-empty list of strings")
        for text in doc["elements"]:
            parse_element(text)
    if "selector" in doc:
        IndexRule.parse(_rule(doc["selector"], "experiment.selector"))
    if "boundaries" in doc:
        _rule(doc["boundaries"], "experiment.boundaries")
    return dict(doc)


@dataclass(frozen=True, eq=False)
class SpecFile:
    operator: OperatorSpec = None
    projection: object = field(default_factory=canonical_family)
    experiment: dict = field(default_factory=dict)
    sha256: str = ""

    def to_json(self):
        doc = {}
        if self.operator is not None:
            doc["operator"] = operator_to_json(self.operator)
        doc["projection"] = family_to_json(self.projection)
        if self.experiment:
            doc["experiment"] = dict(self.experiment)
        return doc


def parse_spec(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidSpec(f"malformed JSON: {e}") from None
    _check_keys(doc, TOP_KEYS, "spec")
    operator = operator_from_json(doc["operator"]) if "operator" in doc else None
    return SpecFile(
        operator=operator,
        projection=family_from_json(doc.get("projection")),
        experiment=_experiment(doc.get("experiment")),
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


def load_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise InvalidSpec(f"cannot read spec file {path}: {e.strerror}") from None
    spec = parse_spec(text)
    log.debug("loaded %s (sha256 %s)", path, spec.sha256[:12])
    return spec


# ----------------------------------------------------------------------------
# Matrix files for berg: a line "N", then N lines of N entries like 1.5-2i
# ----------------------------------------------------------------------------

def parse_matrix(text):
    lines = [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise InvalidSpec("matrix file is empty")
    try:
        n = int(lines[0])
    except ValueError:
        raise InvalidSpec(f"matrix header must be the dimension, got {lines[0]!r}") from None
    if n < 1 or len(lines) != n + 1:
        raise InvalidSpec(f"matrix header says {n} rows, found {len(lines) - 1}")
    out = np.zeros((n, n), dtype=complex)
    for r, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != n:
            raise InvalidSpec(f"matrix row {r + 1} has {len(tokens)} entries, expected {n}")
        for c, tok in enumerate(tokens):
            out[r, c] = _complex(tok, f"matrix[{r + 1},{c + 1}]")
    return out


def load_matrix(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_matrix(f.read())
    except OSError as e:
        raise InvalidSpec(f"cannot read matrix file {path}: {e.strerror}") from None


def format_matrix(a):
    def entry(z):
        return f"{z.real!r}{'-' if z.imag < 0 else '+'}{abs(z.imag)!r}i"

    a = np.asarray(a, dtype=complex)
    rows = [" ".join(entry(complex(z)) for z in row) for row in a]
    return "\n".join([str(a.shape[0]), *rows]) + "\n"
