"""Golden fixtures: canonical JSON tables of SymExpr keyed by tuples."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .symexpr import SymExpr, from_json


def _key_text(key) -> str:
    if isinstance(key, tuple):
        return "|".join(str(k) for k in key)
    return str(key)


def _key_parse(text: str):
    parts = text.split("|")
    out = []
    for p in parts:
        try:
            out.append(int(p))
        except ValueError:
            out.append(p)
    return tuple(out) if len(out) > 1 else out[0]


def table_to_json(table: dict) -> dict:
    return {_key_text(k): v.to_json() for k, v in sorted(table.items(), key=lambda kv: _key_text(kv[0]))}


def table_from_json(data: dict) -> dict:
    return {_key_parse(k): from_json(v) for k, v in data.items()}


def dump_json(obj, path: Path) -> None:
    """Deterministic JSON: sorted keys, fixed indent, trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def fixture_path(*parts: str) -> Path:
    return Path(str(resources.files("defect_charges").joinpath("fixtures", *parts)))


def load_fixture(*parts: str) -> dict:
    return json.loads(fixture_path(*parts).read_text())


def load_table(*parts: str) -> dict[object, SymExpr]:
    return table_from_json(load_fixture(*parts))
