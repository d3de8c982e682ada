"""JSON file formats for graphs, vectors, combinations and anchored functions.

Graph::

    {"vertices": ["0", "1", "2"],
     "edges": [{"u": "0", "v": "1", "length": 1.0}, ...],
     "basepoint": "v:0"}

Edge ids are positions in ``edges``.  Points are written ``v:<vertex>`` or
``e:<edge-id>:<offset>`` with the offset measured from the edge endpoint
that comes first in ``vertices``.

Vector: ``{"atoms": [{"coefficient": 0.5, "point": "v:1"}, ...]}``.
Combination: ``{"terms": [{"lambda": 0.5, "p": "v:1", "q": "e:0:0.25"}, ...]}``.
Function: ``{"constant": 1.0, "anchors": [{"point": "v:1", "value": 0.3}, ...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import DomainError
from .free_space import FreeVector, MolecularCombination
from .metric_graph import MetricGraph


class FormatError(DomainError):
    """Unreadable or malformed input file; the message names the location."""


def read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be an object")
    return data


def _wrap(path, fn):
    try:
        return fn()
    except FormatError:
        raise
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from None


def load_graph(path: str | Path) -> MetricGraph:
    data = read_json(path)
    return _wrap(path, lambda: MetricGraph.from_dict(data))


def parse_vector(G: MetricGraph, data: dict) -> FreeVector:
    if "atoms" in data:
        return FreeVector(
            tuple((float(a["coefficient"]), G.parse_point(a["point"])) for a in data["atoms"])
        )
    if "terms" in data:
        return parse_combination(G, data).to_vector(G)
    raise KeyError("expected 'atoms' or 'terms'")


def parse_combination(G: MetricGraph, data: dict) -> MolecularCombination:
    if "terms" not in data:
        raise KeyError("expected 'terms'")
    return MolecularCombination.of(
        (float(t["lambda"]), G.parse_point(t["p"]), G.parse_point(t["q"])) for t in data["terms"]
    )


def load_vector(G: MetricGraph, path: str | Path) -> FreeVector:
    data = read_json(path)
    return _wrap(path, lambda: parse_vector(G, data))


def load_combination(G: MetricGraph, path: str | Path) -> MolecularCombination:
    data = read_json(path)
    return _wrap(path, lambda: parse_combination(G, data))


def load_function(G: MetricGraph, path: str | Path):
    data = read_json(path)

    def parse():
        anchors = {G.parse_point(a["point"]): float(a["value"]) for a in data["anchors"]}
        return anchors, float(data.get("constant", 1.0))

    return _wrap(path, parse)


def dump_graph(G: MetricGraph) -> str:
    return json.dumps(G.to_dict(), indent=2)
