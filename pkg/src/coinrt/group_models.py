"""Finite groups by multiplication table and crystallographic groups.

A crystallographic group of dimension n is stored as lattice Z^n plus a finite
holonomy group: holonomy element ``h`` carries a rotation ``A_h`` (unimodular
integer matrix) and a rational translation ``s_h``.  The element ``(m, h)`` is
the affine map ``x -> A_h x + s_h + m``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .lattice_alg import (
    IntMatrix,
    cokernel,
    det,
    frac_str,
    hermite_normal_form,
    reduce_mod_hnf,
    solve_rational,
)


class GroupError(ValueError):
    """Invalid group, subgroup or homomorphism data."""


class ContainmentError(GroupError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class ValidationReport:
    ok: bool = True
    violations: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def fail(self, msg: str) -> None:
        self.ok = False
        self.violations.append(msg)

    @property
    def first_violation(self) -> str | None:
        return self.violations[0] if self.violations else None

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# finite groups


class FiniteGroup:
    """A finite group given by its multiplication table on ``range(order)``."""

    is_finite = True

    def __init__(self, table: Sequence[Sequence[int]], names: Sequence[str] | None = None, name: str = ""):
        self.table = tuple(tuple(int(x) for x in row) for row in table)
        self.order = len(self.table)
        if any(len(r) != self.order for r in self.table):
            raise GroupError("multiplication table must be square")
        if any(not 0 <= x < self.order for r in self.table for x in r):
            raise GroupError("table entry out of range")
        ident = [e for e in range(self.order) if all(self.table[e][x] == x == self.table[x][e] for x in range(self.order))]
        if not ident:
            raise GroupError("table has no two-sided identity")
        self.identity = ident[0]
        inverse = []
        for a in range(self.order):
            inv = [b for b in range(self.order) if self.table[a][b] == self.identity]
            if len(inv) != 1 or self.table[inv[0]][a] != self.identity:
                raise GroupError(f"element {a} has no unique inverse")
            inverse.append(inv[0])
        self.inverse = tuple(inverse)
        self.names = tuple(names) if names else None
        self.name = name

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or self.order})"

    def elements(self) -> range:
        return range(self.order)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverse[a]

    def power(self, a: int, k: int) -> int:
        if k < 0:
            a, k = self.inverse[a], -k
        out = self.identity
        for _ in range(k):
            out = self.table[out][a]
        return out

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.table[x][a]
            k += 1
        return k

    def sort_key(self, a: int):
        return a

    def format(self, a: int) -> str:
        return self.names[a] if self.names else str(a)

    def validate(self) -> ValidationReport:
        rep = ValidationReport()
        t = self.table
        for a, b, c in itertools.product(range(self.order), repeat=3):
            if t[t[a][b]][c] != t[a][t[b][c]]:
                rep.fail(f"associativity fails for ({a},{b},{c})")
                return rep
        return rep

    def subgroup(self, gens: Iterable[int]) -> frozenset[int]:
        elems = {self.identity}
        frontier = [self.identity]
        gens = list(gens)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.table[x][g]
                    if y not in elems:
                        elems.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(elems)

    @cached_property
    def generators(self) -> tuple[int, ...]:
        gens: list[int] = []
        span = frozenset({self.identity})
        for x in range(self.order):
            if x not in span:
                gens.append(x)
                span = self.subgroup(gens)
        return tuple(gens)

    @cached_property
    def subgroups(self) -> tuple[frozenset[int], ...]:
        found = {self.subgroup([x]) for x in range(self.order)}
        frontier = set(found)
        while frontier:
            new = set()
            for a in frontier:
                for b in list(found):
                    j = self.subgroup(a | b)
                    if j not in found and j not in new:
                        new.add(j)
            found |= new
            frontier = new
        return tuple(sorted(found, key=lambda s: (len(s), sorted(s))))

    def is_normal(self, elems: frozenset[int]) -> bool:
        return all(self.mul(self.mul(g, x), self.inv(g)) in elems for g in self.generators for x in elems)

    @cached_property
    def normal_subgroups(self) -> tuple[frozenset[int], ...]:
        return tuple(s for s in self.subgroups if self.is_normal(s))


def cyclic_group(n: int, names: Sequence[str] | None = None) -> FiniteGroup:
    return FiniteGroup([[(a + b) % n for b in range(n)] for a in range(n)], names, name=f"Z/{n}")


def group_from_elements(elems: Sequence, mul: Callable, name: str = "", names=None) -> FiniteGroup:
    index = {e: i for i, e in enumerate(elems)}
    table = [[index[mul(a, b)] for b in elems] for a in elems]
    return FiniteGroup(table, names, name)


def direct_product(G: FiniteGroup, H: FiniteGroup) -> FiniteGroup:
    elems = [(a, b) for a in G.elements() for b in H.elements()]
    return group_from_elements(elems, lambda x, y: (G.mul(x[0], y[0]), H.mul(x[1], y[1])), name=f"{G.name}x{H.name}")


def permutation_group(gens: Sequence[Sequence[int]], name: str = "") -> FiniteGroup:
    n = len(gens[0])
    ident = tuple(range(n))
    elems = {ident}
    frontier = [ident]
    gens = [tuple(g) for g in gens]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(p[g[i]] for i in range(n))
                if q not in elems:
                    elems.add(q)
                    nxt.append(q)
        frontier = nxt
    ordered = sorted(elems)
    return group_from_elements(ordered, lambda p, q: tuple(p[q[i]] for i in range(n)), name=name)


def dihedral_group(n: int) -> FiniteGroup:
    rot = [(i + 1) % n for i in range(n)]
    ref = [(-i) % n for i in range(n)]
    return permutation_group([rot, ref], name=f"D{n}")


def symmetric_group(n: int) -> FiniteGroup:
    if n == 1:
        return cyclic_group(1)
    cyc = [(i + 1) % n for i in range(n)]
    swap = [1, 0] + list(range(2, n))
    return permutation_group([cyc, swap], name=f"S{n}")


def alternating_group_4() -> FiniteGroup:
    return permutation_group([[1, 2, 0, 3], [1, 0, 3, 2]], name="A4")


def quaternion_group() -> FiniteGroup:
    # unit quaternions as (sign, basis index) with basis 1,i,j,k
    mult = {
        (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
        (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
        (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
    }

    def mul(x, y):
        s, b = mult[(x[1], y[1])]
        return (x[0] * y[0] * s, b)

    elems = [(s, b) for s in (1, -1) for b in range(4)]
    return group_from_elements(elems, mul, name="Q8")


# ---------------------------------------------------------------------------
# crystallographic groups


@dataclass(frozen=True, order=True)
class CrystElement:
    """Lattice vector ``m`` with holonomy index ``h``; orders by sector first."""

    h: int
    m: tuple[int, ...]


def _fracvec(v) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in v)


def frac_mod1(v) -> tuple[Fraction, ...]:
    return tuple(x - (x.numerator // x.denominator) for x in (Fraction(y) for y in v))


class CrystGroup:
    is_finite = False

    def __init__(
        self,
        dim: int,
        holonomy: FiniteGroup,
        rotations: Sequence,
        translations: Sequence,
        name: str = "",
        generator_names: dict[str, CrystElement] | None = None,
        relations: Sequence[str] = (),
    ):
        self.dim = dim
        self.holonomy = holonomy
        self.rotations = tuple(r if isinstance(r, IntMatrix) else IntMatrix(r) for r in rotations)
        self.translations = tuple(_fracvec(s) for s in translations)
        if len(self.rotations) != holonomy.order or len(self.translations) != holonomy.order:
            raise GroupError("need one rotation and one translation per holonomy element")
        for A in self.rotations:
            if A.shape != (dim, dim):
                raise GroupError(f"rotation part has shape {A.shape}, expected {(dim, dim)}")
        for s in self.translations:
            if len(s) != dim:
                raise GroupError("translation part has wrong length")
        self.name = name
        self.generator_names = dict(generator_names or {})
        self.relations = tuple(relations)
        self._rot_index = {A: h for h, A in enumerate(self.rotations)}

    def __repr__(self) -> str:
        return f"CrystGroup({self.name or self.dim})"

    @property
    def identity(self) -> CrystElement:
        return CrystElement(self.holonomy.identity, (0,) * self.dim)

    @property
    def orientable(self) -> bool:
        return all(det(A) == 1 for A in self.rotations)

    @property
    def is_torus(self) -> bool:
        return self.holonomy.order == 1

    def element(self, m: Sequence[int], h: int | None = None) -> CrystElement:
        return CrystElement(self.holonomy.identity if h is None else h, tuple(int(x) for x in m))

    def translation(self, v: Sequence[int]) -> CrystElement:
        return self.element(v)

    def carry(self, h: int, k: int) -> tuple[int, ...]:
        hk = self.holonomy.mul(h, k)
        c = tuple(
            a + b - s
            for a, b, s in zip(self.translations[h], self.rotations[h].apply(self.translations[k]), self.translations[hk])
        )
        if any(x.denominator != 1 for x in c):
            raise GroupError(f"cocycle condition fails for holonomy pair ({h},{k})")
        return tuple(int(x) for x in c)

    @cached_property
    def _carries(self):
        H = self.holonomy
        return {(h, k): self.carry(h, k) for h in H.elements() for k in H.elements()}

    def mul(self, x: CrystElement, y: CrystElement) -> CrystElement:
        A = self.rotations[x.h]
        c = self._carries[(x.h, y.h)]
        m = tuple(a + b + ci for a, b, ci in zip(x.m, A.apply(y.m), c))
        return CrystElement(self.holonomy.mul(x.h, y.h), m)

    def inv(self, x: CrystElement) -> CrystElement:
        hi = self.holonomy.inv(x.h)
        c = self._carries[(x.h, hi)]
        Ai = self.rotations[hi]
        m = Ai.apply(tuple(-(a + b) for a, b in zip(x.m, c)))
        return CrystElement(hi, m)

    def power(self, x: CrystElement, k: int) -> CrystElement:
        if k < 0:
            x, k = self.inv(x), -k
        out = self.identity
        for _ in range(k):
            out = self.mul(out, x)
        return out

    def affine(self, x: CrystElement) -> tuple[IntMatrix, tuple[Fraction, ...]]:
        return self.rotations[x.h], tuple(s + m for s, m in zip(self.translations[x.h], x.m))

    def act(self, x: CrystElement, point: Sequence) -> tuple[Fraction, ...]:
        A, t = self.affine(x)
        return tuple(a + b for a, b in zip(A.apply(point), t))

    def from_affine(self, A: IntMatrix, t: Sequence) -> CrystElement:
        h = self._rot_index.get(A)
        if h is None:
            raise GroupError(f"{A} is not a rotation part of {self.name}")
        m = [Fraction(a) - s for a, s in zip(t, self.translations[h])]
        if any(x.denominator != 1 for x in m):
            raise GroupError("translation is not in the group")
        return CrystElement(h, tuple(int(x) for x in m))

    def holonomy_lift(self, h: int) -> CrystElement:
        return CrystElement(h, (0,) * self.dim)

    def lattice_generators(self) -> list[CrystElement]:
        return [self.translation([int(i == j) for j in range(self.dim)]) for i in range(self.dim)]

    def generators(self) -> list[CrystElement]:
        return self.lattice_generators() + [self.holonomy_lift(h) for h in self.holonomy.generators]

    def sort_key(self, x: CrystElement):
        return (x.h, x.m)

    def format(self, x: CrystElement) -> str:
        m = str(x.m[0]) if self.dim == 1 else "(" + ",".join(map(str, x.m)) + ")"
        if x.h == self.holonomy.identity:
            return m
        return f"{m}.{self.holonomy.format(x.h)}"

    def canonical_point(self, point: Sequence) -> tuple[Fraction, ...]:
        """Least representative in [0,1)^n of the orbit of ``point``."""
        return min(frac_mod1(self.act(self.holonomy_lift(h), point)) for h in self.holonomy.elements())

    def word(self, text: str) -> CrystElement:
        """Evaluate a word like ``'alpha t2 alpha^-1'`` over ``generator_names``."""
        out = self.identity
        for tok in text.split():
            mt = re.fullmatch(r"([A-Za-z_]\w*)(?:\^(-?\d+))?", tok)
            if not mt or mt.group(1) not in self.generator_names:
                raise GroupError(f"bad word token {tok!r}")
            out = self.mul(out, self.power(self.generator_names[mt.group(1)], int(mt.group(2) or 1)))
        return out


def torus_group(n: int) -> CrystGroup:
    names = {f"t{i + 1}": CrystElement(0, tuple(int(i == j) for j in range(n))) for i in range(n)}
    return CrystGroup(n, cyclic_group(1, ["1"]), [IntMatrix.identity(n)], [(0,) * n], name=f"Z^{n}", generator_names=names)


def g2_bieberbach(s_alpha=(Fraction(1, 2), 0, 0)) -> CrystGroup:
    """The orientable flat 3-manifold group with holonomy Z/2 (half-turn)."""
    A = IntMatrix.diag([1, -1, -1])
    names = {
        "t1": CrystElement(0, (1, 0, 0)),
        "t2": CrystElement(0, (0, 1, 0)),
        "t3": CrystElement(0, (0, 0, 1)),
        "alpha": CrystElement(1, (0, 0, 0)),
    }
    relations = (
        "t1 t2 = t2 t1",
        "t1 t3 = t3 t1",
        "t2 t3 = t3 t2",
        "alpha^2 = t1",
        "alpha t2 alpha^-1 = t2^-1",
        "alpha t3 alpha^-1 = t3^-1",
    )
    return CrystGroup(
        3,
        cyclic_group(2, ["1", "\u03b1"]),
        [IntMatrix.identity(3), A],
        [(0, 0, 0), s_alpha],
        name="G2",
        generator_names=names,
        relations=relations,
    )


def validate_cryst(G: CrystGroup, require_torsion_free: bool = True) -> ValidationReport:
    rep = ValidationReport()
    H = G.holonomy
    n = G.dim
    hv = H.validate()
    if not hv:
        rep.fail(f"holonomy: {hv.first_violation}")
        return rep
    e = H.identity
    if G.rotations[e] != IntMatrix.identity(n):
        rep.fail("rotation part of the identity is not I")
    if any(x != 0 for x in G.translations[e]):
        rep.fail("translation part of the identity is not 0")
    for h, A in enumerate(G.rotations):
        if abs(det(A)) != 1:
            rep.fail(f"rotation part of holonomy element {h} is not unimodular")
    for h in H.elements():
        for k in H.elements():
            hk = H.mul(h, k)
            if G.rotations[h] @ G.rotations[k] != G.rotations[hk]:
                rep.fail(f"cocycle: A_{h} A_{k} != A_{hk}")
            else:
                try:
                    G.carry(h, k)
                except GroupError:
                    rep.fail(f"cocycle: A_{h} s_{k} + s_{h} - s_{hk} not integral")
    if len({A for A in G.rotations}) != H.order:
        rep.fail("holonomy representation is not faithful")
    if not rep.ok:
        return rep
    rep.info["orientable"] = G.orientable
    torsion_free = True
    for h in H.elements():
        if h == e:
            continue
        r = H.element_order(h)
        A = G.rotations[h]
        N = IntMatrix.zeros(n, n)
        P = IntMatrix.identity(n)
        for _ in range(r):
            N = N + P
            P = A @ P
        w = N.apply(G.translations[h])
        # (m,h)^r is the translation N(s_h + m); torsion iff -N s_h in N Z^n
        if cokernel(N).contains(tuple(-x for x in w)):
            torsion_free = False
            if require_torsion_free:
                rep.fail(f"torsion: some element with holonomy {H.format(h)} has finite order")
    rep.info["torsion_free"] = torsion_free
    for rel in G.relations:
        lhs, rhs = (s.strip() for s in rel.split("="))
        left = G.word(lhs)
        right = G.identity if rhs == "1" else G.word(rhs)
        if left != right:
            rep.fail(f"relation {rel!r} fails: {G.format(left)} != {G.format(right)}")
    return rep


# ---------------------------------------------------------------------------
# sublattices and subgroups


@dataclass(frozen=True)
class Sublattice:
    """Full-rank sublattice of Z^n, stored by its Hermite basis (rows)."""

    basis: IntMatrix

    @classmethod
    def from_generators(cls, rows: Sequence[Sequence[int]], invariant_under: Iterable[IntMatrix] = ()) -> Sublattice:
        H, _ = hermite_normal_form(IntMatrix(rows))
        nz = [r for r in H.rows() if any(r)]
        if len(nz) != H.ncols:
            raise GroupError("sublattice must have full rank")
        L = cls(IntMatrix(nz, H.ncols))
        for A in invariant_under:
            w = L.invariance_witness(A)
            if w is not None:
                raise ContainmentError(f"sublattice not invariant under {A}: image {w} escapes", w)
        return L

    @classmethod
    def full(cls, n: int) -> Sublattice:
        return cls(IntMatrix.identity(n))

    @classmethod
    def scaled(cls, n: int, k: int) -> Sublattice:
        return cls(IntMatrix.identity(n).scale(k))

    @property
    def dim(self) -> int:
        return self.basis.ncols

    @property
    def index(self) -> int:
        return det(self.basis)

    @property
    def columns(self) -> IntMatrix:
        """Basis vectors as columns, so that ``columns @ y`` is a lattice point."""
        return self.basis.T

    def contains(self, v: Sequence) -> bool:
        return not any(reduce_mod_hnf(self.basis, v))

    def reduce(self, v: Sequence) -> tuple:
        return reduce_mod_hnf(self.basis, v)

    def coordinates(self, v: Sequence) -> tuple[Fraction, ...]:
        return solve_rational(self.columns, v)

    def coset_reps(self) -> list[tuple[int, ...]]:
        n = self.dim
        return [tuple(v) for v in itertools.product(*[range(self.basis[i, i]) for i in range(n)])]

    def invariance_witness(self, A: IntMatrix):
        for b in self.basis.rows():
            img = A.apply(b)
            if not self.contains(img):
                return img
        return None

    def __repr__(self) -> str:
        return f"Sublattice({self.basis.tolist()})"


class Quotient:
    """A finite quotient group with projection and section maps."""

    def __init__(self, group: FiniteGroup, project: Callable, lift: Callable, name: str = ""):
        self.group = group
        self.project = project
        self.lift = lift
        self.name = name


class FiniteSubgroup:
    def __init__(self, ambient: FiniteGroup, elements: Iterable[int]):
        self.ambient = ambient
        self.element_set = frozenset(elements)
        if ambient.subgroup(self.element_set) != self.element_set:
            raise GroupError("element set is not a subgroup")
        self.is_finite = True

    def contains(self, x) -> bool:
        return x in self.element_set

    def elements(self) -> list[int]:
        return sorted(self.element_set)

    def generators(self) -> list[int]:
        gens: list[int] = []
        span = frozenset({self.ambient.identity})
        for x in self.elements():
            if x not in span:
                gens.append(x)
                span = self.ambient.subgroup(gens)
        return gens

    @property
    def order(self) -> int:
        return len(self.element_set)

    @property
    def index(self) -> int:
        return self.ambient.order // self.order

    def is_normal(self) -> bool:
        return self.ambient.is_normal(self.element_set)

    @cached_property
    def quotient(self) -> Quotient:
        G = self.ambient
        if not self.is_normal():
            raise GroupError("quotient by a non-normal subgroup")
        cosets: list[tuple[int, ...]] = []
        coset_of: dict[int, int] = {}
        for g in G.elements():
            if g in coset_of:
                continue
            c = tuple(sorted(G.mul(g, s) for s in self.element_set))
            for x in c:
                coset_of[x] = len(cosets)
            cosets.append(c)
        reps = [c[0] for c in cosets]
        table = [[coset_of[G.mul(a, b)] for b in reps] for a in reps]
        names = [G.format(r) + "\u0304" for r in reps]
        return Quotient(FiniteGroup(table, names, name=f"{G.name}/N"), coset_of.__getitem__, reps.__getitem__)


class LatticeSubgroup:
    """The translations by a holonomy-invariant sublattice of a crystallographic group."""

    is_finite = False

    def __init__(self, ambient: CrystGroup, lattice: Sublattice):
        self.ambient = ambient
        self.lattice = lattice
        w = next((lattice.invariance_witness(A) for A in ambient.rotations if lattice.invariance_witness(A) is not None), None)
        if w is not None:
            raise ContainmentError(f"lattice is not normal: conjugate translation {w} escapes", w)

    def contains(self, x: CrystElement) -> bool:
        return x.h == self.ambient.holonomy.identity and self.lattice.contains(x.m)

    def generators(self) -> list[CrystElement]:
        return [self.ambient.translation(r) for r in self.lattice.basis.rows()]

    @property
    def index(self) -> int:
        return self.lattice.index * self.ambient.holonomy.order

    @cached_property
    def quotient(self) -> Quotient:
        return finite_quotient(self.ambient, self.lattice)


def trivial_subgroup(G):
    return FiniteSubgroup(G, [G.identity])


def finite_quotient(G: CrystGroup, L: Sublattice) -> Quotient:
    """Pi / L for an invariant sublattice L of the translations."""
    for A in G.rotations:
        w = L.invariance_witness(A)
        if w is not None:
            raise ContainmentError(f"sublattice not invariant under rotation {A.tolist()}", w)
    reps = [CrystElement(h, m) for h in G.holonomy.elements() for m in L.coset_reps()]
    reps.sort()
    index = {x: i for i, x in enumerate(reps)}

    def project(x: CrystElement) -> int:
        return index[CrystElement(x.h, tuple(int(v) for v in L.reduce(x.m)))]

    table = [[project(G.mul(a, b)) for b in reps] for a in reps]
    hn = G.holonomy.names
    # pure holonomy lifts are named after their holonomy element, the rest by representative
    names = [(hn[r.h] if hn and not G.is_torus and not any(r.m) else G.format(r)) + "\u0304" for r in reps]
    return Quotient(FiniteGroup(table, names, name=f"{G.name}/L"), project, reps.__getitem__)


# ---------------------------------------------------------------------------
# homomorphisms


class GroupHom:
    source: object
    target: object

    def __call__(self, x):
        raise NotImplementedError

    def generator_images(self):
        return [(g, self(g)) for g in _generators(self.source)]


def _generators(G) -> list:
    if isinstance(G, FiniteGroup):
        return list(G.generators)
    return G.generators()


class TableHom(GroupHom):
    """Homomorphism out of a finite group, listed elementwise."""

    def __init__(self, source: FiniteGroup, target, images: Sequence):
        if len(images) != source.order:
            raise GroupError("need one image per source element")
        self.source = source
        self.target = target
        self.images = tuple(images)

    def __call__(self, x):
        return self.images[x]

    def __repr__(self) -> str:
        return f"TableHom({self.source!r} -> {self.target!r}, {self.images})"


class AffineHom(GroupHom):
    """Homomorphism induced by an affine map ``x -> D x + d`` between flat manifolds.

    Conjugation: ``phi(alpha) o f = f o alpha`` where ``f(x) = D x + d``.
    """

    def __init__(self, source: CrystGroup, target: CrystGroup, linear, translation, holonomy_map: Sequence[int]):
        self.source = source
        self.target = target
        self.linear = linear if isinstance(linear, IntMatrix) else IntMatrix(linear)
        self.translation = _fracvec(translation)
        self.holonomy_map = tuple(int(k) for k in holonomy_map)
        if self.linear.shape != (target.dim, source.dim):
            raise GroupError("linear part has wrong shape")
        if len(self.holonomy_map) != source.holonomy.order:
            raise GroupError("holonomy map must list one image per source holonomy element")

    def lattice_part(self, x: CrystElement):
        S, T = self.source, self.target
        k = self.holonomy_map[x.h]
        D, d = self.linear, self.translation
        sh = S.translations[x.h]
        Dv = D.apply(tuple(s + m for s, m in zip(sh, x.m)))
        Ad = T.rotations[k].apply(d)
        return k, tuple(a + b - c - s for a, b, c, s in zip(Dv, d, Ad, T.translations[k]))

    def __call__(self, x: CrystElement) -> CrystElement:
        k, v = self.lattice_part(x)
        if any(Fraction(c).denominator != 1 for c in v):
            raise GroupError("affine data does not map into the target group")
        return CrystElement(k, tuple(int(c) for c in v))

    def __repr__(self) -> str:
        return f"AffineHom(D={self.linear.tolist()}, d={[frac_str(x) for x in self.translation]}, theta={self.holonomy_map})"


class GeneratorHom(GroupHom):
    """Homomorphism out of a crystallographic group given on generators.

    ``lattice_images[i]`` is the image of the basis translation e_i and
    ``lift_images[k]`` the image of ``(0, k)``.
    """

    def __init__(self, source: CrystGroup, target, lattice_images: Sequence, lift_images: Sequence):
        self.source = source
        self.target = target
        self.lattice_images = tuple(lattice_images)
        self.lift_images = tuple(lift_images)

    def __call__(self, x: CrystElement):
        T = self.target
        out = T.identity
        for img, c in zip(self.lattice_images, x.m):
            out = T.mul(out, T.power(img, c))
        return T.mul(out, self.lift_images[x.h])


class ConjugatedHom(GroupHom):
    def __init__(self, beta, base: GroupHom):
        self.beta = beta
        self.base = base
        self.source = base.source
        self.target = base.target
        self._beta_inv = base.target.inv(beta)

    def __call__(self, x):
        T = self.target
        return T.mul(T.mul(self.beta, self.base(x)), self._beta_inv)


class RestrictedHom(GroupHom):
    def __init__(self, base: GroupHom, domain, codomain):
        self.base = base
        self.domain = domain
        self.codomain = codomain
        self.source = base.source
        self.target = base.target

    def __call__(self, x):
        return self.base(x)


def trivial_hom(source, target) -> GroupHom:
    if isinstance(source, FiniteGroup):
        return TableHom(source, target, [target.identity] * source.order)
    return GeneratorHom(source, target, [target.identity] * source.dim, [target.identity] * source.holonomy.order)


def all_homomorphisms(G: FiniteGroup, H: FiniteGroup) -> list[TableHom]:
    """Every homomorphism G -> H, found by labelling the Cayley graph of G."""
    gens = G.generators
    out = []
    for imgs in itertools.product(H.elements(), repeat=len(gens)):
        img = {G.identity: H.identity}
        frontier = [G.identity]
        ok = True
        while frontier and ok:
            nxt = []
            for x in frontier:
                for g, y in zip(gens, imgs):
                    z, w = G.mul(x, g), H.mul(img[x], y)
                    if z in img:
                        if img[z] != w:
                            ok = False
                            break
                    else:
                        img[z] = w
                        nxt.append(z)
                if not ok:
                    break
            frontier = nxt
        if ok:
            out.append(TableHom(G, H, [img[x] for x in G.elements()]))
    return out


def conjugate_hom(beta, phi: GroupHom) -> GroupHom:
    """The homomorphism ``x -> beta phi(x) beta^-1``."""
    T = phi.target
    if isinstance(phi, AffineHom):
        B, b = T.affine(beta)
        theta = tuple(T.holonomy.mul(T.holonomy.mul(beta.h, k), T.holonomy.inv(beta.h)) for k in phi.holonomy_map)
        d = tuple(x + y for x, y in zip(B.apply(phi.translation), b))
        return AffineHom(phi.source, T, B @ phi.linear, d, theta)
    if isinstance(phi, TableHom):
        bi = T.inv(beta)
        return TableHom(phi.source, T, [T.mul(T.mul(beta, y), bi) for y in phi.images])
    return ConjugatedHom(beta, phi)


def validate_hom(phi: GroupHom, extra_pairs: int = 0) -> ValidationReport:
    rep = ValidationReport()
    S, T = phi.source, phi.target
    if isinstance(phi, TableHom):
        for a in S.elements():
            for b in S.elements():
                lhs = phi(S.mul(a, b))
                rhs = T.mul(phi(a), phi(b))
                if lhs != rhs:
                    rep.fail(
                        f"phi({S.format(a)}*{S.format(b)}) = {T.format(lhs)} but "
                        f"phi({S.format(a)})*phi({S.format(b)}) = {T.format(rhs)}"
                    )
                    rep.info["witness"] = (a, b, lhs, rhs)
                    return rep
        return rep
    if isinstance(phi, AffineHom):
        D = phi.linear
        th = phi.holonomy_map
        H1, H2 = S.holonomy, T.holonomy
        for h in H1.elements():
            for k in H1.elements():
                if th[H1.mul(h, k)] != H2.mul(th[h], th[k]):
                    rep.fail(f"holonomy map is not a homomorphism at ({h},{k})")
                    return rep
        for h in H1.elements():
            if D @ S.rotations[h] != T.rotations[th[h]] @ D:
                rep.fail(f"D A_{h} != A_theta({h}) D")
                return rep
            _, v = phi.lattice_part(S.holonomy_lift(h))
            if any(Fraction(c).denominator != 1 for c in v):
                rep.fail(f"translation condition fails for holonomy element {h}")
                return rep
    try:
        gens = _generators(S)
        for a in gens:
            for b in gens:
                lhs = phi(S.mul(a, b))
                rhs = T.mul(phi(a), phi(b))
                if lhs != rhs:
                    rep.fail(f"homomorphism law fails on generators ({S.format(a)}, {S.format(b)})")
                    rep.info["witness"] = (a, b, lhs, rhs)
                    return rep
        if isinstance(phi, GeneratorHom):
            _check_presentation(phi, rep)
    except GroupError as exc:
        rep.fail(str(exc))
    return rep


def _check_presentation(phi: GeneratorHom, rep: ValidationReport) -> None:
    # defining relations of a crystallographic group in lattice+lift form
    S, T = phi.source, phi.target
    li = phi.lattice_images
    for i, j in itertools.combinations(range(S.dim), 2):
        if T.mul(li[i], li[j]) != T.mul(li[j], li[i]):
            rep.fail(f"images of t{i + 1}, t{j + 1} do not commute")
            return
    for k in S.holonomy.elements():
        g = phi.lift_images[k]
        gi = T.inv(g)
        for i in range(S.dim):
            e = tuple(int(i == j) for j in range(S.dim))
            lhs = T.mul(T.mul(g, li[i]), gi)
            rhs = phi(S.translation(S.rotations[k].apply(e)))
            if lhs != rhs:
                rep.fail(f"conjugation relation fails for lift {k} and t{i + 1}")
                return
        for l in S.holonomy.elements():
            lhs = T.mul(g, phi.lift_images[l])
            rhs = phi(S.mul(S.holonomy_lift(k), S.holonomy_lift(l)))
            if lhs != rhs:
                rep.fail(f"lift product relation fails for ({k},{l})")
                rep.info["witness"] = (k, l, lhs, rhs)
                return


def restrict_and_descend(phi: GroupHom, gamma1, gamma2) -> tuple[RestrictedHom, TableHom]:
    """Restriction to Gamma_1 -> Gamma_2 and the induced map of quotients.

    Containment phi(Gamma_1) <= Gamma_2 is checked on generators of Gamma_1.
    """
    for g in gamma1.generators():
        img = phi(g)
        if not gamma2.contains(img):
            raise ContainmentError(
                f"phi({phi.source.format(g)}) = {phi.target.format(img)} is not in Gamma_2", (g, img)
            )
    Q1, Q2 = gamma1.quotient, gamma2.quotient
    images = [Q2.project(phi(Q1.lift(i))) for i in Q1.group.elements()]
    bar = TableHom(Q1.group, Q2.group, images)
    for g in _generators(phi.source):
        if Q2.project(phi(g)) != bar(Q1.project(g)):
            raise GroupError("induced quotient map does not commute with projections")
    return RestrictedHom(phi, gamma1, gamma2), bar


# ---------------------------------------------------------------------------
# catalog


@dataclass
class AlgebraicBundle:
    """Groups, homomorphism pair and cover subgroups for algebraic-mode checks."""

    name: str
    pi1: object
    pi2: object
    phi: GroupHom
    psi: GroupHom
    gamma1: object
    gamma2: object


def example1_bundle() -> AlgebraicBundle:
    G2 = g2_bieberbach()
    Z2 = cyclic_group(2, ["1", "\u03b2"])
    phi = GeneratorHom(G2, Z2, [0, 0, 0], [0, 1])
    psi = trivial_hom(G2, Z2)
    return AlgebraicBundle("example1", G2, Z2, phi, psi, LatticeSubgroup(G2, Sublattice.full(3)), trivial_subgroup(Z2))


def example2_bundle() -> AlgebraicBundle:
    G2 = g2_bieberbach()
    Z2 = cyclic_group(2, ["1", "\u03b2"])
    phi = trivial_hom(Z2, G2)
    psi = trivial_hom(Z2, G2)
    return AlgebraicBundle("example2", Z2, G2, phi, psi, trivial_subgroup(Z2), LatticeSubgroup(G2, Sublattice.full(3)))


def builtin_catalog(name: str):
    m = re.fullmatch(r"torus_(\d+)", name)
    if m:
        n = int(m.group(1))
        if not 1 <= n <= 6:
            raise KeyError(f"torus dimension {n} outside 1..6")
        return torus_group(n)
    table = {
        "g2_bieberbach": g2_bieberbach,
        "cyclic_2": lambda: cyclic_group(2, ["1", "b"]),
        "example1_bundle": example1_bundle,
        "example2_bundle": example2_bundle,
    }
    if name not in table:
        raise KeyError(f"unknown catalog entry {name!r}")
    obj = table[name]()
    if isinstance(obj, CrystGroup):
        rep = validate_cryst(obj)
        if not rep:
            raise GroupError(f"catalog group {name} invalid: {rep.first_violation}")
    return obj
