"""Coincidences of affine map pairs on flat manifolds.

A map is given by a lift ``x -> D x + d`` to Euclidean space together with
the holonomy map of the homomorphism it induces.  For a nondegenerate pair
every Reidemeister class carries exactly one coincidence point, with local
index ``sign det(E - B D)`` where ``B`` is the rotation part of the class
representative.  The oracle finds the same points by brute-force search
over the fundamental domain.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .group_models import (
    AffineHom,
    CrystElement,
    CrystGroup,
    Sublattice,
    ValidationReport,
    validate_hom,
)
from .lattice_alg import IntMatrix, det, frac_str, hnf_lattice_points, mat_vec, rational_inverse, reduce_mod_hnf, solve_rational
from .reidemeister import (
    CrystSet,
    IdentityFailure,
    LatticeSet,
    ReidemeisterSet,
    twisted_classes_cryst,
)


class DegeneratePairError(ValueError):
    def __init__(self, sectors, message: str | None = None):
        super().__init__(message or f"degenerate pair: det(E - A_h D) = 0 in holonomy sector(s) {list(sectors)}")
        self.sectors = tuple(sectors)


class NonorientableError(ValueError):
    pass


class BoundaryCoincidenceError(ValueError):
    def __init__(self, point):
        super().__init__(f"coincidence point {tuple(frac_str(x) for x in point)} lies on the region boundary; perturb the region")
        self.point = tuple(point)


Vec = tuple[Fraction, ...]


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class AffineMapSpec:
    """The map of flat manifolds covered by ``x -> linear x + translation``."""

    source: CrystGroup
    target: CrystGroup
    linear: IntMatrix
    translation: Vec
    holonomy_map: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.linear, IntMatrix):
            object.__setattr__(self, "linear", IntMatrix(self.linear))
        object.__setattr__(self, "translation", tuple(Fraction(x) for x in self.translation))
        object.__setattr__(self, "holonomy_map", tuple(int(k) for k in self.holonomy_map))

    @classmethod
    def identity(cls, G: CrystGroup) -> AffineMapSpec:
        return cls(G, G, IntMatrix.identity(G.dim), (0,) * G.dim, tuple(G.holonomy.elements()))

    @classmethod
    def linear_map(cls, G: CrystGroup, D, d=None, theta=None) -> AffineMapSpec:
        d = d if d is not None else (0,) * G.dim
        theta = theta if theta is not None else tuple(G.holonomy.elements())
        return cls(G, G, D, d, theta)

    @cached_property
    def hom(self) -> AffineHom:
        return AffineHom(self.source, self.target, self.linear, self.translation, self.holonomy_map)

    def lift(self, x: Sequence) -> Vec:
        return tuple(a + b for a, b in zip(self.linear.apply(x), self.translation))

    def left_compose(self, beta: CrystElement) -> AffineMapSpec:
        """The lift ``beta o f``; it induces the conjugate homomorphism."""
        T = self.target
        B, b = T.affine(beta)
        H = T.holonomy
        theta = tuple(H.mul(H.mul(beta.h, k), H.inv(beta.h)) for k in self.holonomy_map)
        return AffineMapSpec(
            self.source,
            T,
            B @ self.linear,
            tuple(x + y for x, y in zip(B.apply(self.translation), b)),
            theta,
        )

    def validate(self) -> ValidationReport:
        return self._validation

    @cached_property
    def _validation(self) -> ValidationReport:
        rep = validate_hom(self.hom)
        if not rep:
            return rep
        S, T = self.source, self.target
        # f(alpha x) = phi(alpha) f(x) as affine maps, compared exactly
        for a in S.generators():
            A, t = S.affine(a)
            lhs_lin = self.linear @ A
            lhs_tr = tuple(x + y for x, y in zip(self.linear.apply(t), self.translation))
            B, b = T.affine(self.hom(a))
            rhs_lin = B @ self.linear
            rhs_tr = tuple(x + y for x, y in zip(B.apply(self.translation), b))
            if lhs_lin != rhs_lin or lhs_tr != rhs_tr:
                rep.fail(f"equivariance fails at generator {S.format(a)}")
                return rep
        return rep


@dataclass(frozen=True, order=True)
class CoincidencePoint:
    location: Vec
    cls: CrystElement
    index: int

    def describe(self, G: CrystGroup | None = None) -> str:
        loc = "(" + ", ".join(frac_str(x) for x in self.location) + ")"
        c = G.format(self.cls) if G is not None else str(self.cls)
        return f"{loc} in [{c}] ind {self.index:+d}"


class TraceVector:
    """Finitely supported integer combination of Reidemeister classes."""

    def __init__(self, rset: ReidemeisterSet, coeffs: dict | Iterable = ()):
        self.rset = rset
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        c: dict = {}
        for k, v in items:
            c[k] = c.get(k, 0) + v
        self.coeffs = {k: v for k, v in c.items() if v != 0}

    def _key(self):
        return getattr(self.rset.target, "sort_key", None) or (lambda x: x)

    def items(self) -> list:
        return sorted(self.coeffs.items(), key=lambda kv: self._key()(kv[0]))

    def __getitem__(self, c) -> int:
        return self.coeffs.get(c, 0)

    def __add__(self, other: TraceVector) -> TraceVector:
        return TraceVector(self.rset, list(self.coeffs.items()) + list(other.coeffs.items()))

    def scale(self, k) -> TraceVector:
        return TraceVector(self.rset, {c: k * v for c, v in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, TraceVector) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def divide_exact(self, k: int) -> TraceVector:
        for c, v in self.items():
            if v % k:
                raise IdentityFailure(f"coefficient {v} of {self.rset.format_class(c)} is not divisible by {k}")
        return TraceVector(self.rset, {c: v // k for c, v in self.coeffs.items()})

    @property
    def augmentation(self) -> int:
        return sum(self.coeffs.values())

    @property
    def support_size(self) -> int:
        return len(self.coeffs)

    def format(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for c, v in self.items():
            name = self.rset.format_class(c)
            mag = "" if abs(v) == 1 else f"{abs(v)}"
            if isinstance(v, Fraction) and v.denominator != 1:
                mag = f"{frac_str(abs(v))}"
            sign = "-" if v < 0 else "+"
            parts.append((sign, f"{mag}{name}"))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for s, t in parts[1:]:
            out += f" {s} {t}"
        return out

    def to_json(self) -> list:
        fmt = self.rset.format_class
        return [{"class": fmt(c), "coefficient": v if isinstance(v, int) else frac_str(v)} for c, v in self.items()]

    def __repr__(self) -> str:
        return f"TraceVector({self.format()})"


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Region:
    """Finite union of disjoint half-open rational boxes ``[lo, hi)`` in [0,1]^n."""

    dim: int
    boxes: tuple[tuple[Vec, Vec], ...] = ()

    def __post_init__(self):
        boxes = tuple((tuple(Fraction(x) for x in lo), tuple(Fraction(x) for x in hi)) for lo, hi in self.boxes)
        object.__setattr__(self, "boxes", boxes)
        for lo, hi in boxes:
            if len(lo) != self.dim or len(hi) != self.dim:
                raise ValueError("box has wrong dimension")
            if any(not (0 <= a < b <= 1) for a, b in zip(lo, hi)):
                raise ValueError("box must satisfy 0 <= lo < hi <= 1")
        for i, (a, b) in enumerate(boxes):
            for c, d in boxes[i + 1:]:
                if all(max(x, z) < min(y, w) for x, y, z, w in zip(a, b, c, d)):
                    raise ValueError("region boxes overlap")

    @classmethod
    def full(cls, n: int) -> Region:
        return cls(n, (((0,) * n, (1,) * n),))

    @classmethod
    def empty(cls, n: int) -> Region:
        return cls(n, ())

    def union(self, other: Region) -> Region:
        return Region(self.dim, self.boxes + other.boxes)

    @staticmethod
    def _box_has(point, direction, lo, hi) -> bool:
        # is point + eps * direction in [lo, hi) for all small eps > 0, reading coordinates mod 1
        for v, s, a, b in zip(point, direction, lo, hi):
            if s < 0:
                w = v if v > 0 else Fraction(1)
                if not (a < w <= b):
                    return False
            elif not (a <= v < b):
                return False
        return True

    def status(self, point: Sequence) -> str:
        """'inside', 'outside' or 'boundary' for a point of [0,1)^n on the torus R^n/Z^n."""
        p = tuple(Fraction(x) for x in point)
        hits = [
            any(self._box_has(p, s, lo, hi) for lo, hi in self.boxes)
            for s in itertools.product((-1, 0, 1), repeat=self.dim)
        ]
        if all(hits):
            return "inside"
        if not any(hits):
            return "outside"
        return "boundary"

    def contains(self, point: Sequence) -> bool:
        st = self.status(point)
        if st == "boundary":
            raise BoundaryCoincidenceError(point)
        return st == "inside"


# ---------------------------------------------------------------------------
# base-level computations


def _check_pair(f: AffineMapSpec, g: AffineMapSpec) -> None:
    if f.source is not g.source or f.target is not g.target:
        raise ValueError("maps must share source and target manifolds")
    if f.source.dim != f.target.dim:
        raise ValueError("maps between manifolds of different dimension are not supported")
    for G in (f.source, f.target):
        if not G.orientable:
            raise NonorientableError(f"{G.name or 'group'} is not orientable; geometric traces need orientable manifolds")
    for m in (f, g):
        rep = m.validate()
        if not rep:
            raise ValueError(f"invalid affine map: {rep.first_violation}")


def sector_matrices(f: AffineMapSpec, g: AffineMapSpec) -> dict[int, IntMatrix]:
    T = f.target
    return {h: g.linear - T.rotations[h] @ f.linear for h in T.holonomy.elements()}


def _nondegenerate(f: AffineMapSpec, g: AffineMapSpec) -> dict[int, IntMatrix]:
    _check_pair(f, g)
    sec = sector_matrices(f, g)
    bad = [h for h, M in sec.items() if det(M) == 0]
    if bad:
        raise DegeneratePairError(bad)
    return sec


def reidemeister_classes(f: AffineMapSpec, g: AffineMapSpec) -> CrystSet:
    return twisted_classes_cryst(f.hom, g.hom)


def _solve_class(f: AffineMapSpec, g: AffineMapSpec, beta: CrystElement) -> tuple[Vec, int]:
    B, b = f.target.affine(beta)
    M = g.linear - B @ f.linear
    dM = det(M)
    if dM == 0:
        raise DegeneratePairError([beta.h])
    c = tuple(x + y - z for x, y, z in zip(B.apply(f.translation), b, g.translation))
    return solve_rational(M, c), _sign(dM)


@dataclass
class CoincidenceClass:
    cls: CrystElement
    points: list[CoincidencePoint]
    index: int


def coincidence_classes(f: AffineMapSpec, g: AffineMapSpec, representative=None) -> list[CoincidenceClass]:
    """One entry per Reidemeister class; ``representative`` may pick any element of each class to solve with."""
    _nondegenerate(f, g)
    R = reidemeister_classes(f, g)
    out = []
    for c in R.classes:
        beta = c if representative is None else representative(c)
        if R.class_of(beta) != c:
            raise ValueError(f"{beta} does not represent class {c}")
        x, s = _solve_class(f, g, beta)
        p = CoincidencePoint(f.source.canonical_point(x), c, s)
        out.append(CoincidenceClass(c, [p], s))
    return out


def local_index(f: AffineMapSpec, g: AffineMapSpec, x: Sequence) -> int:
    _check_pair(f, g)
    T = f.target
    x = tuple(Fraction(v) for v in x)
    y, z = g.lift(x), f.lift(x)
    for h in T.holonomy.elements():
        A = T.rotations[h]
        m = tuple(a - b - s for a, b, s in zip(y, A.apply(z), T.translations[h]))
        if all(v.denominator == 1 for v in m):
            M = g.linear - A @ f.linear
            d = det(M)
            if d == 0:
                raise DegeneratePairError([h], "degenerate coincidence point")
            return _sign(d)
    raise ValueError("point is not a coincidence point")


def reidemeister_trace(f: AffineMapSpec, g: AffineMapSpec, representative=None) -> TraceVector:
    R = reidemeister_classes(f, g)
    return TraceVector(R, {c.cls: c.index for c in coincidence_classes(f, g, representative)})


def lefschetz_number(f: AffineMapSpec, g: AffineMapSpec) -> int:
    L = reidemeister_trace(f, g).augmentation
    if f.source.is_torus and f.target.is_torus:
        closed = det(g.linear - f.linear)
        if closed != L:
            raise IdentityFailure(f"L = {L} but det(G - F) = {closed}")
    return L


def nielsen_number(f: AffineMapSpec, g: AffineMapSpec) -> int:
    return reidemeister_trace(f, g).support_size


def local_trace(f: AffineMapSpec, g: AffineMapSpec, U: Region) -> TraceVector:
    R = reidemeister_classes(f, g)
    coeffs: dict = {}
    for c in coincidence_classes(f, g):
        for p in c.points:
            if U.contains(p.location):
                coeffs[c.cls] = coeffs.get(c.cls, 0) + p.index
    return TraceVector(R, coeffs)


def _box_range(M: IntMatrix, c: Sequence, extent: Sequence[int]) -> list[range]:
    # integer vectors M y - c for y in the box prod [0, extent_j], widened by one
    out = []
    for i in range(M.nrows):
        lo = sum(min(0, M[i, j] * extent[j]) for j in range(M.ncols)) - Fraction(c[i])
        hi = sum(max(0, M[i, j] * extent[j]) for j in range(M.ncols)) - Fraction(c[i])
        out.append(range(math.floor(lo) - 1, math.ceil(hi) + 2))
    return out


def oracle_coincidences(f: AffineMapSpec, g: AffineMapSpec) -> list[CoincidencePoint]:
    """Coincidence points found by exhaustive search over [0,1)^n, one per Pi_1-orbit."""
    sec = _nondegenerate(f, g)
    S, T = f.source, f.target
    R = reidemeister_classes(f, g)
    found: dict = {}
    for h in sorted(sec):
        M = sec[h]
        A = T.rotations[h]
        c = tuple(x + s - e for x, s, e in zip(A.apply(f.translation), T.translations[h], g.translation))
        s = _sign(det(M))
        Minv = rational_inverse(M)
        for m in itertools.product(*_box_range(M, c, (1,) * S.dim)):
            x = mat_vec(Minv, tuple(a + b for a, b in zip(c, m)))
            if not all(0 <= v < 1 for v in x):
                continue
            beta = CrystElement(h, tuple(m))
            p = CoincidencePoint(S.canonical_point(x), R.class_of(beta), s)
            prev = found.get(p.location)
            if prev is not None and prev != p:
                raise IdentityFailure(f"point {p.location} labelled twice: {prev} vs {p}")
            found[p.location] = p
    return sorted(found.values(), key=lambda p: (p.cls, p.location))


def theory_points(f: AffineMapSpec, g: AffineMapSpec) -> list[CoincidencePoint]:
    pts = [p for c in coincidence_classes(f, g) for p in c.points]
    return sorted(pts, key=lambda p: (p.cls, p.location))


def oracle_agrees(f: AffineMapSpec, g: AffineMapSpec) -> bool:
    a, b = theory_points(f, g), oracle_coincidences(f, g)
    if a != b:
        raise IdentityFailure(f"oracle disagrees with class solver: {a} vs {b}")
    return True


# ---------------------------------------------------------------------------
# lattice covers: maps R^n / L1 -> R^n / L2 in the original coordinates


@dataclass(frozen=True)
class CoverMap:
    """A lift ``x -> linear x + translation`` viewed as a map of tori R^n/L1 -> R^n/L2."""

    linear: IntMatrix
    translation: Vec
    source_lattice: Sublattice
    target_lattice: Sublattice

    def validate(self) -> ValidationReport:
        rep = ValidationReport()
        for v in (self.linear @ self.source_lattice.columns).T.rows():
            if not self.target_lattice.contains(v):
                rep.fail(f"lattice vector maps to {v}, outside the target lattice")
                break
        return rep

    def basis_matrix(self) -> list[list[Fraction]]:
        """The linear part in lattice-basis coordinates; integral when the map descends."""
        P1 = self.source_lattice.columns
        P2inv = rational_inverse(self.target_lattice.columns)
        LP = (self.linear @ P1).tolist()
        n = len(LP)
        return [[sum(P2inv[i][k] * LP[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


@dataclass(frozen=True, order=True)
class CoverPoint:
    location: Vec
    cls: CrystElement
    index: int


def _cover_setup(fb: CoverMap, gb: CoverMap, group: CrystGroup):
    M = gb.linear - fb.linear
    d = det(M)
    if d == 0:
        raise DegeneratePairError([0], "degenerate lift pair on the cover")
    R = LatticeSet(M, fb.source_lattice, fb.target_lattice, group=group)
    c = tuple(x - y for x, y in zip(fb.translation, gb.translation))
    return M, _sign(d), R, c


def cover_points_theory(fb: CoverMap, gb: CoverMap, group: CrystGroup) -> tuple[list[CoverPoint], LatticeSet]:
    M, s, R, c = _cover_setup(fb, gb, group)
    L1 = fb.source_lattice
    pts = []
    for delta in R.classes:
        y = solve_rational(M, tuple(a + b for a, b in zip(c, delta.m)))
        pts.append(CoverPoint(tuple(Fraction(v) for v in reduce_mod_hnf(L1.basis, y)), delta, s))
    return sorted(pts, key=lambda p: (p.cls, p.location)), R


def cover_points_oracle(fb: CoverMap, gb: CoverMap, group: CrystGroup) -> list[CoverPoint]:
    M, s, R, c = _cover_setup(fb, gb, group)
    L1, L2 = fb.source_lattice, fb.target_lattice
    extent = [L1.basis[i, i] for i in range(L1.dim)]
    pts = {}
    # y = adj(M) (c + delta) / det(M), kept over a common integer denominator
    d = det(M)
    adj = _adjugate(M)
    q = math.lcm(*(Fraction(x).denominator for x in c))
    qc = [int(Fraction(x) * q) for x in c]
    den = q * d
    for delta in hnf_lattice_points(L2.basis, _box_range(M, c, extent)):
        w = [a + q * b for a, b in zip(qc, delta)]
        num = [sum(a * b for a, b in zip(row, w)) for row in adj]
        if den < 0:
            num = [-x for x in num]
        if not all(0 <= v < e * abs(den) for v, e in zip(num, extent)):
            continue
        y = tuple(Fraction(v, abs(den)) for v in num)
        p = CoverPoint(y, R.class_of(delta), s)
        if y in pts:
            raise IdentityFailure(f"cover point {y} found twice")
        pts[y] = p
    return sorted(pts.values(), key=lambda p: (p.cls, p.location))


def _adjugate(M: IntMatrix) -> list[list[int]]:
    n = M.nrows
    if n == 1:
        return [[1]]
    rows = M.rows()
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]
            out[j][i] = (-1) ** (i + j) * det(IntMatrix(minor))
    return out


def cover_lefschetz_closed_form(fb: CoverMap, gb: CoverMap) -> int:
    K = CoverMap(gb.linear - fb.linear, (0,) * fb.linear.nrows, fb.source_lattice, fb.target_lattice).basis_matrix()
    if any(x.denominator != 1 for r in K for x in r):
        raise IdentityFailure("lift does not descend: basis matrix is not integral")
    return det(IntMatrix([[int(x) for x in r] for r in K]))
