"""Named example bundles and the JSON bundle-file loader.

A geometric bundle carries a pair of affine maps between flat manifolds and
the two cover lattices. An algebraic bundle carries a homomorphism pair, the
cover subgroups and index tables that may depend on an integer ``k``.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Any, Callable

from .formats import (
    InputError,
    cryst_group_from_dict,
    finite_group_from_dict,
    load_json,
    map_from_dict,
    region_from_list,
)
from .group_models import (
    AlgebraicBundle,
    CrystElement,
    CrystGroup,
    FiniteGroup,
    FiniteSubgroup,
    GeneratorHom,
    GroupError,
    LatticeSubgroup,
    Sublattice,
    TableHom,
    conjugate_hom,
    example1_bundle,
    example2_bundle,
    g2_bieberbach,
    torus_group,
    validate_cryst,
    validate_hom,
)
from .lattice_alg import IntMatrix
from .reidemeister import coin_subgroup, subgroup_classes, twisted_classes
from .averaging import validate_cover
from .trace_geometry import AffineMapSpec, Region

SCHEMA_VERSION = 1

IndexTable = Callable[[int], dict]


@dataclass
class GeometricBundle:
    name: str
    f: AffineMapSpec
    g: AffineMapSpec
    L1: Sublattice
    L2: Sublattice
    region: Region | None = None

    @property
    def fixed(self) -> bool:
        return self.g == AffineMapSpec.identity(self.f.source) and self.f.source is self.f.target


@dataclass
class AlgebraicCase:
    name: str
    bundle: AlgebraicBundle
    lift_tables: IndexTable
    lhs_table: IndexTable | None
    symbolic: bool = True
    notes: list[str] = field(default_factory=list)


def _circle() -> CrystGroup:
    return torus_group(1)


def circle_3_1() -> GeometricBundle:
    S = _circle()
    f = AffineMapSpec.linear_map(S, [[3]])
    return GeometricBundle("circle-3-1", f, AffineMapSpec.identity(S), Sublattice.scaled(1, 2), Sublattice.scaled(1, 2))


def circle_flip() -> GeometricBundle:
    S = _circle()
    f = AffineMapSpec.linear_map(S, [[-1]])
    U = Region(1, (((0,), ("1/4",)), (("3/4",), (1,))))
    return GeometricBundle("circle-flip", f, AffineMapSpec.identity(S), Sublattice.scaled(1, 2), Sublattice.scaled(1, 2), U)


def torus_rotation() -> GeometricBundle:
    T = torus_group(2)
    f = AffineMapSpec.linear_map(T, [[0, -1], [1, 0]])
    return GeometricBundle("torus-rotation", f, AffineMapSpec.identity(T), Sublattice.scaled(2, 2), Sublattice.scaled(2, 2))


def torus_hyperbolic() -> GeometricBundle:
    T = torus_group(2)
    f = AffineMapSpec.linear_map(T, [[2, 1], [1, 1]])
    return GeometricBundle("torus-hyperbolic", f, AffineMapSpec.identity(T), Sublattice.scaled(2, 2), Sublattice.scaled(2, 2))


def g2_endo() -> GeometricBundle:
    G = g2_bieberbach()
    f = AffineMapSpec.linear_map(G, [[3, 0, 0], [0, 2, 1], [0, 1, 1]])
    L = Sublattice.scaled(3, 2)
    return GeometricBundle("g2-endo", f, AffineMapSpec.identity(G), L, L)


def lift_tables_from_base(bundle: AlgebraicBundle, base: dict, sections: dict | None = None) -> dict:
    """Lift index tables forced by a base index table.

    Each base coefficient at ``[c]`` is spread over the lift classes above it;
    a lift class over ``[c]`` at coset ``i`` carries ``|u(coin(tau_c phi, psi))|``
    times the base index, where ``u`` is the projection to Pi_1/Gamma_1.
    """
    cover = validate_cover(bundle.phi, bundle.psi, bundle.gamma1, bundle.gamma2)
    rset = twisted_classes(bundle.phi, bundle.psi)
    T = bundle.pi2
    tables: dict = {}
    for i in cover.Q2.group.elements():
        beta = (sections or {}).get(i, cover.coset_reps[i])
        sub = subgroup_classes(conjugate_hom(beta, bundle.phi), bundle.psi, cover.gamma1, cover.gamma2)
        table = {}
        for c, v in base.items():
            if v == 0:
                continue
            for gamma in _lift_candidates(T, cover, c, beta):
                if sub.class_of(gamma) != gamma or rset.class_of(T.mul(gamma, beta)) != rset.class_of(c):
                    continue
                coin = coin_subgroup(conjugate_hom(T.mul(gamma, beta), bundle.phi), bundle.psi)
                table[gamma] = table.get(gamma, 0) + len(coin.image_in(cover.Q1)) * v
        tables[i] = table
    return tables


def _lift_candidates(T, cover, c, beta) -> list:
    # elements gamma of Gamma_2 with gamma*beta in the base class; enough for the
    # built-in bundles, whose base classes are singletons or whose Gamma_2 is finite
    if isinstance(cover.gamma2, FiniteSubgroup):
        return sorted(cover.gamma2.elements(), key=T.sort_key)
    gamma = T.mul(c, T.inv(beta))
    return [gamma] if cover.gamma2.contains(gamma) else []


def example1_case() -> AlgebraicCase:
    b = example1_bundle()
    one = b.pi2.identity
    return AlgebraicCase(
        "example1",
        b,
        lambda k: {0: {one: k}, 1: {one: k}},
        lambda k: {one: k},
        notes=["base and lift traces are both a single class carrying index k"],
    )


def _example2_base(G: CrystGroup, k: int) -> dict:
    e = G.identity
    t1 = G.translation((1, 0, 0))
    a = G.holonomy_lift(1)
    return {
        e: k,
        t1: -k,
        G.mul(G.translation((0, 1, -1)), a): 2 * k,
        a: k + 1,
    }


def example2_case() -> AlgebraicCase:
    b = example2_bundle()

    def lifts(k: int) -> dict:
        return lift_tables_from_base(b, _example2_base(b.pi2, k))

    return AlgebraicCase(
        "example2",
        b,
        lifts,
        lambda k: _example2_base(b.pi2, k),
        notes=["lift indices are twice the base indices since coin(phi, psi) maps onto Pi_1/Gamma_1"],
    )


GEOMETRIC_EXAMPLES: dict[str, Callable[[], GeometricBundle]] = {
    "circle-3-1": circle_3_1,
    "circle-flip": circle_flip,
    "torus-rotation": torus_rotation,
    "torus-hyperbolic": torus_hyperbolic,
    "g2-endo": g2_endo,
}

ALGEBRAIC_EXAMPLES: dict[str, Callable[[], AlgebraicCase]] = {
    "example1": example1_case,
    "example2": example2_case,
}


def example_names() -> list[str]:
    return sorted(GEOMETRIC_EXAMPLES) + sorted(ALGEBRAIC_EXAMPLES)


def load_example(name: str) -> GeometricBundle | AlgebraicCase:
    if name in GEOMETRIC_EXAMPLES:
        return GEOMETRIC_EXAMPLES[name]()
    if name in ALGEBRAIC_EXAMPLES:
        return ALGEBRAIC_EXAMPLES[name]()
    raise InputError(f"unknown example {name!r}; choose from {', '.join(example_names())}")


# bundle files


def _index_expr(v: Any) -> Callable[[int], int]:
    """An index value: an integer or a polynomial in ``k`` such as ``"2*k-1"``."""
    if isinstance(v, int) and not isinstance(v, bool):
        return lambda k: v
    if not isinstance(v, str):
        raise InputError(f"index value must be an integer or an expression in k, got {v!r}")
    try:
        tree = ast.parse(v, mode="eval")
    except SyntaxError:
        raise InputError(f"cannot parse index expression {v!r}") from None
    allowed = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult, ast.USub, ast.UAdd)
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id == "k":
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            continue
        if isinstance(node, (ast.Load,) + allowed):
            continue
        raise InputError(f"index expression {v!r} may use only integers, k, +, - and *")
    code = compile(tree, "<index>", "eval")
    return lambda k: eval(code, {"__builtins__": {}}, {"k": k})


def _group(d: Any):
    if isinstance(d, dict) and "table" in d:
        return finite_group_from_dict(d)
    G = cryst_group_from_dict(d)
    rep = validate_cryst(G)
    if not rep:
        raise InputError(f"group is not a Bieberbach group: {rep.first_violation}")
    return G


def _element(G, v: Any):
    if isinstance(G, FiniteGroup):
        if isinstance(v, int) and not isinstance(v, bool) and 0 <= v < G.order:
            return v
        if isinstance(v, str) and G.names and v in G.names:
            return G.names.index(v)
        raise InputError(f"{v!r} is not an element of {G.name or 'the finite group'}")
    if isinstance(v, dict) and "m" in v:
        h = v.get("h", 0)
        if not (isinstance(h, int) and 0 <= h < G.holonomy.order) or len(v["m"]) != G.dim:
            raise InputError(f"bad crystallographic element {v!r}")
        return CrystElement(h, tuple(int(x) for x in v["m"]))
    raise InputError(f"crystallographic elements are written as {{'h': k, 'm': [..]}}, got {v!r}")


def _lattice(d: Any, G: CrystGroup) -> Sublattice:
    if isinstance(d, dict) and "scale" in d:
        return Sublattice.scaled(G.dim, int(d["scale"]))
    if isinstance(d, dict) and "basis" in d:
        rows = IntMatrix(d["basis"]).rows()
        L = Sublattice.from_generators(rows, invariant_under=G.rotations)
        if L.index == 0:
            raise InputError("cover lattice must have full rank")
        return L
    raise InputError("a cover lattice is given as {'scale': n} or {'basis': [[..]]}")


def _subgroup(d: Any, G):
    if isinstance(G, FiniteGroup):
        if not isinstance(d, dict) or "elements" not in d:
            raise InputError("a subgroup of a finite group is given as {'elements': [..]}")
        return FiniteSubgroup(G, [_element(G, x) for x in d["elements"]])
    if isinstance(d, dict) and "elements" in d:
        return FiniteSubgroup(G, [_element(G, x) for x in d["elements"]])
    return LatticeSubgroup(G, _lattice(d, G))


def _hom(d: Any, S, T):
    if d == "trivial":
        if isinstance(S, FiniteGroup):
            return TableHom(S, T, [T.identity] * S.order)
        return GeneratorHom(S, T, [T.identity] * S.dim, [T.identity] * S.holonomy.order)
    if isinstance(S, FiniteGroup):
        if "images" not in d:
            raise InputError("a homomorphism out of a finite group is given as {'images': [..]}")
        return TableHom(S, T, [_element(T, x) for x in d["images"]])
    if "lattice_images" in d:
        return GeneratorHom(S, T, [_element(T, x) for x in d["lattice_images"]], [_element(T, x) for x in d["lift_images"]])
    return map_from_dict(d, S, T).hom


def _require(d: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in d]
    if missing:
        raise InputError(f"bundle is missing {', '.join(missing)}")


def parse_bundle(d: Any, name: str = "bundle") -> GeometricBundle | AlgebraicCase:
    if not isinstance(d, dict):
        raise InputError("bundle must be a JSON object")
    if d.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise InputError(f"unsupported bundle schema {d.get('schema')!r}")
    mode = d.get("mode", "geometric")
    name = d.get("name", name)
    try:
        if mode == "geometric":
            return _parse_geometric(d, name)
        if mode == "algebraic":
            return _parse_algebraic(d, name)
    except (GroupError, ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{name}: {exc}") from None
    raise InputError(f"unknown mode {mode!r}")


def _parse_geometric(d: dict, name: str) -> GeometricBundle:
    _require(d, "source", "f", "g", "gamma1")
    S = _group(d["source"])
    T = _group(d.get("target", d["source"])) if "target" in d else S
    if not isinstance(S, CrystGroup) or not isinstance(T, CrystGroup):
        raise InputError("geometric mode needs crystallographic groups")
    f = map_from_dict(d["f"], S, T)
    g = map_from_dict(d["g"], S, T)
    for label, m in (("f", f), ("g", g)):
        rep = m.validate()
        if not rep:
            raise InputError(f"map {label} is not equivariant: {rep.first_violation}")
    L1 = _lattice(d["gamma1"], S)
    L2 = _lattice(d.get("gamma2", d["gamma1"]), T)
    U = region_from_list(d["region"], S.dim) if "region" in d else None
    return GeometricBundle(name, f, g, L1, L2, U)


def _parse_algebraic(d: dict, name: str) -> AlgebraicCase:
    _require(d, "source", "target", "phi", "psi", "gamma1", "gamma2")
    S, T = _group(d["source"]), _group(d["target"])
    phi, psi = _hom(d["phi"], S, T), _hom(d["psi"], S, T)
    for label, h in (("phi", phi), ("psi", psi)):
        rep = validate_hom(h)
        if not rep:
            raise InputError(f"{label} is not a homomorphism: {rep.first_violation}")
    b = AlgebraicBundle(name, S, T, phi, psi, _subgroup(d["gamma1"], S), _subgroup(d["gamma2"], T))
    cover = validate_cover(phi, psi, b.gamma1, b.gamma2)
    entries = []
    for e in d.get("lift_indices", []):
        _require(e, "coset", "class", "index")
        i = cover.Q2.project(_element(T, e["coset"]))
        entries.append((i, _element(T, e["class"]), _index_expr(e["index"])))
    lhs_entries = None
    if "lhs_indices" in d:
        lhs_entries = []
        for e in d["lhs_indices"]:
            _require(e, "class", "index")
            lhs_entries.append((_element(T, e["class"]), _index_expr(e["index"])))

    def lifts(k: int) -> dict:
        out: dict = {}
        for i, c, v in entries:
            out.setdefault(i, {})
            out[i][c] = out[i].get(c, 0) + v(k)
        return out

    def lhs(k: int) -> dict:
        out: dict = {}
        for c, v in lhs_entries or ():
            out[c] = out.get(c, 0) + v(k)
        return out

    symbolic = any("k" in str(e.get("index")) for e in d.get("lift_indices", []) + d.get("lhs_indices", []))
    return AlgebraicCase(name, b, lifts, lhs if lhs_entries is not None else None, symbolic)


def load_bundle(path: str) -> GeometricBundle | AlgebraicCase:
    return parse_bundle(load_json(path), name=path)
