"""JSON encodings of groups, homomorphisms, affine maps and regions.

Rationals are written as strings ``"p/q"`` (or ``"p"`` when integral) so that
decoding and re-encoding reproduces the input text exactly.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .group_models import AffineHom, CrystGroup, FiniteGroup, GroupError, builtin_catalog
from .lattice_alg import IntMatrix, frac_str
from .trace_geometry import AffineMapSpec, Region


class InputError(ValueError):
    """Malformed or inconsistent input; carries a location when known."""


def parse_rational(x: Any) -> Fraction:
    if isinstance(x, bool):
        raise InputError(f"expected a rational, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad rational {x!r}") from None
    raise InputError(f"expected an integer or a 'p/q' string, got {x!r}")


def _int_matrix(rows: Any, what: str) -> IntMatrix:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InputError(f"{what} must be a list of rows")
    if any(not isinstance(x, int) or isinstance(x, bool) for r in rows for x in r):
        raise InputError(f"{what} must have integer entries")
    try:
        return IntMatrix(rows)
    except ValueError as exc:
        raise InputError(f"{what}: {exc}") from None


def finite_group_to_dict(G: FiniteGroup) -> dict:
    d: dict = {"order": G.order, "table": [list(r) for r in G.table]}
    if G.names:
        d["names"] = list(G.names)
    return d


def finite_group_from_dict(d: dict) -> FiniteGroup:
    try:
        table = d["table"]
        if d.get("order", len(table)) != len(table):
            raise InputError("holonomy order does not match table size")
        return FiniteGroup(table, d.get("names"))
    except KeyError as exc:
        raise InputError(f"missing field {exc}") from None
    except GroupError as exc:
        raise InputError(str(exc)) from None


def cryst_group_to_dict(G: CrystGroup) -> dict:
    return {
        "dimension": G.dim,
        "holonomy": finite_group_to_dict(G.holonomy),
        "rotation_parts": [A.tolist() for A in G.rotations],
        "translation_parts": [[frac_str(x) for x in s] for s in G.translations],
    }


def cryst_group_from_dict(d: dict) -> CrystGroup:
    if isinstance(d, str):
        return _catalog_group(d)
    if "catalog" in d:
        return _catalog_group(d["catalog"])
    try:
        H = finite_group_from_dict(d["holonomy"])
        rots = [_int_matrix(r, "rotation part") for r in d["rotation_parts"]]
        trans = [[parse_rational(x) for x in s] for s in d["translation_parts"]]
        return CrystGroup(int(d["dimension"]), H, rots, trans)
    except KeyError as exc:
        raise InputError(f"missing field {exc}") from None
    except GroupError as exc:
        raise InputError(str(exc)) from None


def _catalog_group(name: str) -> CrystGroup:
    try:
        G = builtin_catalog(name)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    if not isinstance(G, CrystGroup):
        raise InputError(f"catalog entry {name!r} is not a crystallographic group")
    return G


def hom_to_dict(phi: AffineHom) -> dict:
    return {
        "linear": phi.linear.tolist(),
        "translation": [frac_str(x) for x in phi.translation],
        "holonomy_map": list(phi.holonomy_map),
    }


def map_to_dict(f: AffineMapSpec) -> dict:
    return {
        "linear": f.linear.tolist(),
        "translation": [frac_str(x) for x in f.translation],
        "holonomy_map": list(f.holonomy_map),
    }


def map_from_dict(d: Any, source: CrystGroup, target: CrystGroup) -> AffineMapSpec:
    if d == "identity":
        if source is not target:
            raise InputError("identity map needs equal source and target")
        return AffineMapSpec.identity(source)
    try:
        D = _int_matrix(d["linear"], "linear part")
        t = [parse_rational(x) for x in d.get("translation", [0] * source.dim)]
        theta = d.get("holonomy_map", list(source.holonomy.elements()) if source is target else None)
        if theta is None:
            raise InputError("holonomy_map is required between different groups")
        return AffineMapSpec(source, target, D, t, theta)
    except KeyError as exc:
        raise InputError(f"missing field {exc}") from None
    except (GroupError, ValueError) as exc:
        raise InputError(str(exc)) from None


def hom_from_dict(d: dict, source: CrystGroup, target: CrystGroup) -> AffineHom:
    return map_from_dict(d, source, target).hom


def region_to_list(U: Region) -> list:
    return [{"lo": [frac_str(x) for x in lo], "hi": [frac_str(x) for x in hi]} for lo, hi in U.boxes]


def region_from_list(boxes: list, dim: int) -> Region:
    try:
        return Region(dim, tuple(([parse_rational(x) for x in b["lo"]], [parse_rational(x) for x in b["hi"]]) for b in boxes))
    except KeyError as exc:
        raise InputError(f"region box missing {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=False)
