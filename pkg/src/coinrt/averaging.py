"""Averaging identities over finite regular covers.

Each report evaluates both sides independently.  The left side is the trace
(or index, or Lefschetz number) downstairs.  The right side sums, over the
deck cosets of the target cover, the trace of every lifted pair on the cover,
pushed down through inclusion and right multiplication, and divides by the
degree of the source cover.  Division is done over the integers with an explicit
remainder check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .group_models import (
    AlgebraicBundle,
    ContainmentError,
    CrystElement,
    FiniteSubgroup,
    GroupError,
    GroupHom,
    LatticeSubgroup,
    Sublattice,
    conjugate_hom,
    restrict_and_descend,
)
from .reidemeister import (
    IdentityFailure,
    ReidemeisterSet,
    subgroup_classes,
    twisted_classes,
    twisted_classes_cryst,
)
from .trace_geometry import (
    AffineMapSpec,
    CoverMap,
    CoverPoint,
    Region,
    TraceVector,
    cover_lefschetz_closed_form,
    cover_points_oracle,
    cover_points_theory,
    lefschetz_number,
    local_trace,
    reidemeister_trace,
)


class ModeError(ValueError):
    pass


@dataclass
class CoverSpec:
    phi: GroupHom
    psi: GroupHom
    gamma1: object
    gamma2: object
    index1: int
    index2: int
    coset_reps: list

    @property
    def Q1(self):
        return self.gamma1.quotient

    @property
    def Q2(self):
        return self.gamma2.quotient

    @property
    def geometric(self) -> bool:
        return isinstance(self.gamma1, LatticeSubgroup) and isinstance(self.gamma2, LatticeSubgroup)

    def coset_label(self, i: int) -> str:
        return self.Q2.group.format(i)


def _as_subgroup(G, gamma):
    if isinstance(gamma, Sublattice):
        return LatticeSubgroup(G, gamma)
    return gamma


def validate_cover(phi: GroupHom, psi: GroupHom, gamma1, gamma2) -> CoverSpec:
    """Check normality, finite index and containment; pick least coset representatives."""
    gamma1 = _as_subgroup(phi.source, gamma1)
    gamma2 = _as_subgroup(phi.target, gamma2)
    for G in (gamma1, gamma2):
        if isinstance(G, FiniteSubgroup) and not G.is_normal():
            raise GroupError("cover subgroup is not normal")
    restrict_and_descend(phi, gamma1, gamma2)
    restrict_and_descend(psi, gamma1, gamma2)
    Q1, Q2 = gamma1.quotient, gamma2.quotient
    reps = [Q2.lift(i) for i in Q2.group.elements()]
    return CoverSpec(phi, psi, gamma1, gamma2, Q1.group.order, Q2.group.order, reps)


def geometric_cover(f: AffineMapSpec, g: AffineMapSpec, L1: Sublattice, L2: Sublattice) -> CoverSpec:
    return validate_cover(f.hom, g.hom, LatticeSubgroup(f.source, L1), LatticeSubgroup(f.target, L2))


@dataclass
class LiftCatalog:
    fbar: CoverMap
    gbar: CoverMap
    lifts: dict[int, CoverMap]
    reps: dict[int, CrystElement]


def lift_maps(f: AffineMapSpec, g: AffineMapSpec, cover: CoverSpec, sections: Mapping[int, CrystElement] | None = None) -> LiftCatalog:
    """Lifts of f and g to the covers R^n/L1 -> R^n/L2, one lift of f per deck coset."""
    if not cover.geometric:
        raise ModeError("geometric mode needs lattice cover subgroups; use algebraic mode")
    L1, L2 = cover.gamma1.lattice, cover.gamma2.lattice
    for m in (f, g):
        rep = m.validate()
        if not rep:
            raise ValueError(f"invalid affine map: {rep.first_violation}")
    fbar = CoverMap(f.linear, f.translation, L1, L2)
    gbar = CoverMap(g.linear, g.translation, L1, L2)
    lifts, reps = {}, {}
    for i in cover.Q2.group.elements():
        beta = (sections or {}).get(i, cover.coset_reps[i])
        if cover.Q2.project(beta) != i:
            raise GroupError(f"section element {beta} does not lie over coset {i}")
        fb = f.left_compose(beta)
        lifts[i] = CoverMap(fb.linear, fb.translation, L1, L2)
        reps[i] = beta
    for m in [fbar, gbar, *lifts.values()]:
        rep = m.validate()
        if not rep:
            raise ContainmentError(f"lift does not descend to the cover: {rep.first_violation}")
    return LiftCatalog(fbar, gbar, lifts, reps)


@dataclass
class SummandRow:
    coset: int
    label: str
    beta: CrystElement | object
    lift_trace: TraceVector
    pushforward: TraceVector
    running: TraceVector
    points: list = field(default_factory=list)


@dataclass
class AveragingReport:
    kind: str
    lhs: TraceVector
    rows: list[SummandRow]
    raw_sum: TraceVector
    divisor: int
    rhs: TraceVector
    equal: bool
    abs_lhs: dict = field(default_factory=dict)
    abs_rhs: dict = field(default_factory=dict)

    @property
    def divisibility_witness(self) -> dict:
        return {"divisor": self.divisor, "quotients": {self.lhs.rset.format_class(c): v // self.divisor for c, v in self.raw_sum.items()}}

    def to_json(self) -> dict:
        fmt = lambda tv: tv.to_json()  # noqa: E731
        return {
            "kind": self.kind,
            "lhs": fmt(self.lhs),
            "summands": [
                {
                    "coset": r.label,
                    "beta": _fmt_elem(r.beta, self.lhs.rset),
                    "lift_trace": fmt(r.lift_trace),
                    "pushforward": fmt(r.pushforward),
                    "running_sum": fmt(r.running),
                }
                for r in self.rows
            ],
            "raw_sum": fmt(self.raw_sum),
            "divisor": self.divisor,
            "divisibility_witness": self.divisibility_witness,
            "rhs": fmt(self.rhs),
            "equal": self.equal,
        }

    def table(self) -> str:
        head = ("coset", "RT summand", "pushforward", "running sum")
        rows = [(r.label, r.lift_trace.format(), r.pushforward.format(), r.running.format()) for r in self.rows]
        widths = [max(len(x[i]) for x in [head, *rows]) for i in range(4)]
        line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
        out = [line(head), line(["-" * w for w in widths])]
        out += [line(r) for r in rows]
        out.append(f"raw sum = {self.raw_sum.format()}   divided by {self.divisor}")
        out.append(f"rhs = {self.rhs.format()}")
        out.append(f"lhs = {self.lhs.format()}")
        out.append("PASS" if self.equal else "FAIL")
        return "\n".join(out)


def _fmt_elem(x, rset: ReidemeisterSet) -> str:
    T = rset.target
    return T.format(x) if T is not None else str(x)


def _push(base: ReidemeisterSet, top: ReidemeisterSet, beta, lift_trace: TraceVector) -> TraceVector:
    # rho_beta o i_hat: [g] in R[tau_b phi', psi'] -> [g]_(tau_b phi, psi) -> [g b]_(phi, psi)
    T = base.target
    out: dict = {}
    for c, v in lift_trace.items():
        top_c = top.class_of(c)
        k = base.class_of(T.mul(top_c, beta))
        out[k] = out.get(k, 0) + v
    return TraceVector(base, out)


def _abs_parts(lhs: TraceVector, rows: list[SummandRow], divisor: int) -> tuple[dict, dict]:
    abs_lhs = {c: abs(v) for c, v in lhs.items()}
    acc: dict = {}
    for r in rows:
        for c, v in r.lift_trace.items():
            k = r.pushforward.rset.class_of(r.pushforward.rset.target.mul(c, r.beta))
            acc[k] = acc.get(k, 0) + abs(v)
    return abs_lhs, {c: Fraction(v, divisor) for c, v in acc.items()}


def _finish(kind, lhs, rows, divisor) -> AveragingReport:
    raw = TraceVector(lhs.rset)
    for r in rows:
        raw = raw + r.pushforward
    rhs = raw.divide_exact(divisor)
    abs_lhs, abs_rhs = _abs_parts(lhs, rows, divisor)
    return AveragingReport(kind, lhs, rows, raw, divisor, rhs, rhs == lhs, abs_lhs, abs_rhs)


def _lift_points(f: AffineMapSpec, cat: LiftCatalog, i: int, g: AffineMapSpec) -> tuple[list[CoverPoint], object]:
    theory, R = cover_points_theory(cat.lifts[i], cat.gbar, f.target)
    oracle = cover_points_oracle(cat.lifts[i], cat.gbar, f.target)
    if theory != oracle:
        raise IdentityFailure(f"cover oracle disagrees for coset {i}: {theory} vs {oracle}")
    return theory, R


def average_rt_coincidence(
    f: AffineMapSpec,
    g: AffineMapSpec,
    cover: CoverSpec,
    region: Region | None = None,
    sections: Mapping[int, CrystElement] | None = None,
    sabotage: bool = False,
) -> AveragingReport:
    """Both sides of the trace averaging identity, optionally restricted to a region."""
    cat = lift_maps(f, g, cover, sections)
    lhs = reidemeister_trace(f, g) if region is None else local_trace(f, g, region)
    base = lhs.rset
    S = f.source
    rows: list[SummandRow] = []
    running = TraceVector(base)
    for i in cover.Q2.group.elements():
        beta = cat.reps[i]
        pts, Rsub = _lift_points(f, cat, i, g)
        if region is not None:
            pts = [p for p in pts if region.contains(S.canonical_point(p.location))]
        lift_trace = TraceVector(Rsub, [(p.cls, p.index) for p in pts])
        top = twisted_classes_cryst(conjugate_hom(beta, f.hom), g.hom)
        pushed = _push(base, top, beta, lift_trace)
        running = running + pushed
        rows.append(SummandRow(i, cover.coset_label(i), beta, lift_trace, pushed, running, pts))
    if sabotage and rows:
        # test hook: corrupt one coefficient so that the identity must fail
        r = rows[0]
        c = base.classes[0]
        r.pushforward = r.pushforward + TraceVector(base, {c: cover.index1})
    return _finish("coincidence-trace" if region is None else "local-trace", lhs, rows, cover.index1)


def average_rt_fixed(f: AffineMapSpec, L: Sublattice, sections=None) -> AveragingReport:
    if f.source is not f.target:
        raise ValueError("fixed-point averaging needs a self-map")
    idm = AffineMapSpec.identity(f.source)
    cover = geometric_cover(f, idm, L, L)
    rep = average_rt_coincidence(f, idm, cover, sections=sections)
    rep.kind = "fixed-point-trace"
    return rep


@dataclass
class IndexAverage:
    lhs: int
    per_lift: list[tuple[str, int]]
    rhs: Fraction
    equal: bool

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "per_lift": [{"coset": c, "index": v} for c, v in self.per_lift],
            "rhs": str(self.rhs),
            "equal": self.equal,
        }


def average_index(f: AffineMapSpec, U: Region, L: Sublattice) -> IndexAverage:
    """Local fixed point index on U against the average over lifts on the preimage of U."""
    idm = AffineMapSpec.identity(f.source)
    cover = geometric_cover(f, idm, L, L)
    lhs = local_trace(f, idm, U).augmentation
    cat = lift_maps(f, idm, cover)
    per = []
    for i in cover.Q2.group.elements():
        pts, _ = _lift_points(f, cat, i, idm)
        per.append((cover.coset_label(i), sum(p.index for p in pts if U.contains(f.source.canonical_point(p.location)))))
    rhs = Fraction(sum(v for _, v in per), cover.index1)
    return IndexAverage(lhs, per, rhs, rhs == lhs)


@dataclass
class LefschetzAverage:
    lhs: int
    per_lift: list[tuple[str, int]]
    rhs: int
    equal: bool
    matches_trace_report: bool

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "per_lift": [{"coset": c, "L": v} for c, v in self.per_lift],
            "rhs": self.rhs,
            "equal": self.equal,
            "matches_trace_report": self.matches_trace_report,
        }


def average_lefschetz(f: AffineMapSpec, g: AffineMapSpec, cover: CoverSpec, trace_report: AveragingReport | None = None) -> LefschetzAverage:
    lhs = lefschetz_number(f, g)
    cat = lift_maps(f, g, cover)
    per = []
    for i in cover.Q2.group.elements():
        closed = cover_lefschetz_closed_form(cat.lifts[i], cat.gbar)
        pts, _ = _lift_points(f, cat, i, g)
        counted = sum(p.index for p in pts)
        if counted != closed:
            raise IdentityFailure(f"lift {i}: index sum {counted} != det {closed}")
        per.append((cover.coset_label(i), closed))
    total = sum(v for _, v in per)
    if total % cover.index1:
        raise IdentityFailure(f"Lefschetz sum {total} not divisible by {cover.index1}")
    rhs = total // cover.index1
    trace_report = trace_report or average_rt_coincidence(f, g, cover)
    return LefschetzAverage(lhs, per, rhs, rhs == lhs, trace_report.rhs.augmentation == rhs)


# ---------------------------------------------------------------------------
# algebraic mode


@dataclass
class AlgebraicReport:
    report: AveragingReport
    sub_sets: dict
    base: ReidemeisterSet


def algebraic_mode_verify(
    bundle: AlgebraicBundle,
    lift_indices: Mapping[int, Mapping],
    lhs_indices: Mapping | None = None,
    sections: Mapping[int, object] | None = None,
) -> AlgebraicReport:
    """Right side of the trace averaging identity from user-supplied lift indices.

    ``lift_indices[i]`` maps canonical classes of R[tau_b phi', psi'] (elements
    of Gamma_2) to integers, for the coset ``i`` of Pi_2/Gamma_2.
    """
    cover = validate_cover(bundle.phi, bundle.psi, bundle.gamma1, bundle.gamma2)
    base = twisted_classes(bundle.phi, bundle.psi)
    T = bundle.pi2
    rows: list[SummandRow] = []
    subs = {}
    running = TraceVector(base)
    for i in cover.Q2.group.elements():
        beta = (sections or {}).get(i, cover.coset_reps[i])
        if cover.Q2.project(beta) != i:
            raise GroupError(f"section element does not lie over coset {i}")
        phi_b = conjugate_hom(beta, bundle.phi)
        sub = subgroup_classes(phi_b, bundle.psi, cover.gamma1, cover.gamma2)
        subs[i] = sub
        table = dict(lift_indices.get(i, {}))
        for key in table:
            if not cover.gamma2.contains(key) or sub.class_of(key) != key:
                raise KeyError(f"index table key {T.format(key)} for coset {cover.coset_label(i)} is not a canonical class")
        lift_trace = TraceVector(sub, table)
        top = twisted_classes(phi_b, bundle.psi)
        pushed = _push(base, top, beta, lift_trace)
        running = running + pushed
        rows.append(SummandRow(i, cover.coset_label(i), beta, lift_trace, pushed, running))
    if lhs_indices is not None:
        for key in lhs_indices:
            if base.class_of(key) != key:
                raise KeyError(f"left-side key {T.format(key)} is not a canonical class")
        lhs = TraceVector(base, dict(lhs_indices))
    else:
        lhs = TraceVector(base)
    rep = _finish("algebraic", lhs, rows, cover.index1)
    if lhs_indices is None:
        rep.equal = None
        rep.lhs = rep.rhs
    return AlgebraicReport(rep, subs, base)
