"""Network JSON files and CSV result tables.

Network document::

    {
      "vertices": [
        {"id": 0, "kind": "pump", "pressure": 1.0},
        {"id": 3, "kind": "junction"},
        {"id": 1, "kind": "valve", "k_valve": 1.0}
      ],
      "edges": [{"tail": 0, "head": 3, "k_supply": 0.5, "k_return": 0.5}],
      "curve_form": "quadratic"
    }

``curve_form`` is ``"quadratic"`` (default) or ``{"exponent": alpha}``.
Valves and edges may carry their own ``"exponent"``, overriding the
document-wide form.  Optional metadata keys (``name``, ``description``,
``units``, ``groups``) are carried along but not interpreted, except that
``groups`` (name -> list of leaf ids) serves as the default partition for
group studies.  Unknown keys are an error unless ``strict=False``, in which
case they only warn.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Any, Mapping, Union

from .components import PipeCurveParams, ValveCurveParams
from .errors import NetworkSyntaxError, SchemaError
from .network import EdgeSpec, Junction, NetworkSpec, Pump, Valve, validate

Source = Union[str, os.PathLike, IO[str]]

BUNDLED = ("two_consumer", "network22")

_TOP_KEYS = {"vertices", "edges", "curve_form", "name", "description", "units", "groups"}
_VERTEX_KEYS = {
    "pump": {"id", "kind", "pressure"},
    "junction": {"id", "kind"},
    "valve": {"id", "kind", "k_valve", "exponent"},
}
_EDGE_KEYS = {"tail", "head", "k_supply", "k_return", "exponent"}


@dataclass(frozen=True)
class NetworkFile:
    """A parsed network document: the validated network plus metadata."""

    network: NetworkSpec
    groups: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)


def _unknown(keys, allowed, where: str, strict: bool) -> None:
    extra = sorted(set(keys) - allowed)
    if not extra:
        return
    msg = f"{where}: unknown key(s) {extra}"
    if strict:
        raise SchemaError(msg)
    warnings.warn(msg, UserWarning, stacklevel=4)


def _number(obj: Mapping, key: str, where: str) -> float:
    if key not in obj:
        raise SchemaError(f"{where}: missing {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise SchemaError(f"{where}.{key}: must be finite")
    return v


def _integer(obj: Mapping, key: str, where: str) -> int:
    if key not in obj:
        raise SchemaError(f"{where}: missing {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _curve_exponent(form) -> float:
    if form is None or form == "quadratic":
        return 2.0
    if isinstance(form, dict) and set(form) == {"exponent"}:
        a = form["exponent"]
        if isinstance(a, (int, float)) and not isinstance(a, bool) and a >= 1:
            return float(a)
    raise SchemaError(f"curve_form: expected \"quadratic\" or {{\"exponent\": >=1}}, got {form!r}")


def network_file_from_dict(doc: Any, strict: bool = True) -> NetworkFile:
    if not isinstance(doc, dict):
        raise SchemaError("network document must be a JSON object")
    for key in ("vertices", "edges"):
        if key not in doc:
            raise SchemaError(f"missing top-level key {key!r}")
        if not isinstance(doc[key], list):
            raise SchemaError(f"{key!r} must be an array")
    _unknown(doc, _TOP_KEYS, "document", strict)
    alpha = _curve_exponent(doc.get("curve_form"))

    vertices = []
    for i, raw in enumerate(doc["vertices"]):
        where = f"vertices[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{where}: expected an object")
        vid = _integer(raw, "id", where)
        kind = raw.get("kind")
        if kind not in _VERTEX_KEYS:
            raise SchemaError(f"{where}.kind: expected pump|junction|valve, got {kind!r}")
        _unknown(raw, _VERTEX_KEYS[kind], where, strict)
        if kind == "pump":
            vertices.append((vid, Pump(_number(raw, "pressure", where))))
        elif kind == "junction":
            vertices.append((vid, Junction()))
        else:
            a = _number(raw, "exponent", where) if "exponent" in raw else alpha
            vertices.append((vid, Valve(ValveCurveParams(_number(raw, "k_valve", where), a))))

    edges = []
    for i, raw in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{where}: expected an object")
        _unknown(raw, _EDGE_KEYS, where, strict)
        a = _number(raw, "exponent", where) if "exponent" in raw else alpha
        edges.append(EdgeSpec(
            _integer(raw, "tail", where),
            _integer(raw, "head", where),
            PipeCurveParams(_number(raw, "k_supply", where),
                            _number(raw, "k_return", where), a),
        ))

    net = validate(vertices, edges)

    groups: dict[str, tuple[int, ...]] = {}
    raw_groups = doc.get("groups", {})
    if not isinstance(raw_groups, dict):
        raise SchemaError("groups: expected an object of name -> leaf id list")
    for name, ids in raw_groups.items():
        if not isinstance(ids, list) or not all(
                isinstance(x, int) and not isinstance(x, bool) for x in ids):
            raise SchemaError(f"groups.{name}: expected a list of integers")
        groups[name] = tuple(ids)
    meta = {k: doc[k] for k in ("name", "description", "units") if k in doc}
    return NetworkFile(net, groups, meta)


def network_from_dict(doc: Any, strict: bool = True) -> NetworkSpec:
    return network_file_from_dict(doc, strict).network


def _read_text(source: Source) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(source, encoding="utf-8") as fh:
        return fh.read()


def load_network_file(source: Source, strict: bool = True) -> NetworkFile:
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkSyntaxError(
            f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return network_file_from_dict(doc, strict)


def parse_network(source: Source, strict: bool = True) -> NetworkSpec:
    """Read and validate a network JSON document from a path or stream."""
    return load_network_file(source, strict).network


def network_to_dict(net: NetworkSpec, **metadata) -> dict:
    exps = {e.pipe.exponent for e in net.edges}
    exps |= {k.curve.exponent for _, k in net.vertices if isinstance(k, Valve)}
    uniform = exps.pop() if len(exps) == 1 else None

    vertices = []
    for vid, kind in net.vertices:
        if isinstance(kind, Pump):
            vertices.append({"id": vid, "kind": "pump", "pressure": kind.pressure})
        elif isinstance(kind, Junction):
            vertices.append({"id": vid, "kind": "junction"})
        else:
            d = {"id": vid, "kind": "valve", "k_valve": kind.curve.k_valve}
            if uniform is None:
                d["exponent"] = kind.curve.exponent
            vertices.append(d)
    edges = []
    for e in net.edges:
        d = {"tail": e.tail, "head": e.head,
             "k_supply": e.pipe.k_supply, "k_return": e.pipe.k_return}
        if uniform is None:
            d["exponent"] = e.pipe.exponent
        edges.append(d)
    doc: dict = {}
    doc.update({k: v for k, v in metadata.items() if v is not None})
    doc["vertices"] = vertices
    doc["edges"] = edges
    if uniform is not None and uniform != 2.0:
        doc["curve_form"] = {"exponent": uniform}
    return doc


def serialize_network(net: NetworkSpec, **metadata) -> str:
    return json.dumps(network_to_dict(net, **metadata), indent=2) + "\n"


def bundled_network_path(name: str):
    """Path-like handle of a network file shipped with the package."""
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in BUNDLED:
        raise FileNotFoundError(f"no bundled network named {name!r}; have {BUNDLED}")
    return resources.files("dhtree") / "networks" / f"{stem}.json"


def load_bundled(name: str) -> NetworkFile:
    with bundled_network_path(name).open("r", encoding="utf-8") as fh:
        return load_network_file(fh)


def resolve_network(ref: str, strict: bool = True) -> NetworkFile:
    """Load ``ref`` as a file path, falling back to a bundled network name.

    The fallback applies when ``ref`` does not exist and its file stem is a
    bundled name, so ``examples/two_consumer.json`` works from any directory.
    """
    if os.path.exists(ref):
        return load_network_file(ref, strict)
    stem = os.path.splitext(os.path.basename(ref))[0]
    if stem in BUNDLED:
        return load_bundled(stem)
    raise FileNotFoundError(f"network file not found: {ref}")


# -- CSV tables --------------------------------------------------------------

def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


@dataclass
class ResultTable:
    """Rows of scalar values under fixed column headers."""

    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, stream: IO[str] | None = None) -> str:
        """Render as CSV (LF line endings, floats to 12 significant digits)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(r.get(c)) for c in self.columns])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def read_csv(source: Source) -> ResultTable:
    """Parse a table written by :meth:`ResultTable.to_csv`; numbers become floats."""
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    columns = next(reader)
    rows = []
    for rec in reader:
        row = {}
        for c, s in zip(columns, rec):
            try:
                row[c] = float(s)
            except ValueError:
                row[c] = s
        rows.append(row)
    return ResultTable(columns, rows)


def solution_table(sol) -> ResultTable:
    """Long-format table of an :class:`~dhtree.solver.EquilibriumSolution`."""
    rows: list[dict] = []
    for v, p in sol.pressure.items():
        rows.append({"quantity": "pressure", "key": str(v), "value": p})
    for (i, j), q in sorted(sol.edge_flow.items()):
        rows.append({"quantity": "edge_flow", "key": f"{i}-{j}", "value": q})
    for leaf, q in sol.consumer_flow.items():
        rows.append({"quantity": "consumer_flow", "key": str(leaf), "value": q})
    rows.append({"quantity": "root_flow", "key": "0", "value": sol.root_flow})
    rows.append({"quantity": "total_consumer_flow", "key": "", "value": sol.total_consumer_flow})
    d = sol.diagnostics
    rows.append({"quantity": "diagnostic", "key": "residual_inf_norm", "value": d.residual_inf_norm})
    rows.append({"quantity": "diagnostic", "key": "outer_iterations", "value": d.outer_iterations})
    rows.append({"quantity": "diagnostic", "key": "method", "value": d.method})
    return ResultTable(["quantity", "key", "value"], rows)


def parse_assignments(text: str, what: str = "assignment") -> dict[int, str]:
    """Split ``"1=0.5,2=1"`` into ``{1: "0.5", 2: "1"}``."""
    out: dict[int, str] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise ValueError(f"bad {what} {item!r}; expected <leaf>=<value>")
        k, v = item.split("=", 1)
        try:
            leaf = int(k.strip())
        except ValueError:
            raise ValueError(f"bad leaf id {k.strip()!r} in {what}") from None
        if leaf in out:
            raise ValueError(f"leaf {leaf} given twice in {what}")
        out[leaf] = v.strip()
    return out

