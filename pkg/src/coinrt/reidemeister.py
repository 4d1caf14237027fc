"""Twisted conjugacy classes, coincidence subgroups and the maps between them.

Classes are identified by canonical representatives: the least element of
the orbit in the target's ordering, or for lattice sectors the Hermite-reduced
vector.  Every set exposes ``class_of`` mapping an arbitrary target element to
its canonical representative.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .group_models import (
    AffineHom,
    CrystElement,
    CrystGroup,
    FiniteGroup,
    FiniteSubgroup,
    GroupError,
    GroupHom,
    LatticeSubgroup,
    Sublattice,
    conjugate_hom,
    restrict_and_descend,
    torus_group,
)
from .lattice_alg import IntMatrix, column_lattice, det, integer_kernel, integer_solve, reduce_mod_hnf


class IdentityFailure(AssertionError):
    """An identity that must hold exactly did not; points at a bug."""


class DegenerateSectorError(ValueError):
    def __init__(self, sectors):
        super().__init__(f"degenerate sector(s): {list(sectors)}")
        self.sectors = tuple(sectors)


class ReidemeisterSet:
    target: object
    finite: bool
    classes: tuple | None
    degenerate_sectors: tuple = ()

    def class_of(self, x):
        raise NotImplementedError

    def format_class(self, c) -> str:
        return f"[{self.target.format(c)}]"

    def __len__(self) -> int:
        if not self.finite:
            raise ValueError("Reidemeister set is infinite")
        return len(self.classes)

    def __iter__(self):
        if not self.finite:
            raise ValueError("Reidemeister set is infinite")
        return iter(self.classes)

    def require_finite(self) -> None:
        if not self.finite:
            if self.degenerate_sectors:
                raise DegenerateSectorError(self.degenerate_sectors)
            raise ValueError("Reidemeister set is infinite")


class OrbitSet(ReidemeisterSet):
    """Orbits of a finite set of target elements under generators of the acting group."""

    def __init__(self, target, elements: Iterable, generators: Sequence, act: Callable):
        self.target = target
        self.finite = True
        elements = list(elements)
        key = target.sort_key
        rep: dict = {}
        sizes: dict = {}
        for x in sorted(elements, key=key):
            if x in rep:
                continue
            orbit = {x}
            frontier = [x]
            while frontier:
                nxt = []
                for y in frontier:
                    for g in generators:
                        z = act(g, y)
                        if z not in orbit:
                            orbit.add(z)
                            nxt.append(z)
                frontier = nxt
            canon = min(orbit, key=key)
            for y in orbit:
                if y in rep:
                    raise IdentityFailure("orbits overlap")
                rep[y] = canon
            sizes[canon] = len(orbit)
        self._rep = rep
        self.orbit_sizes = sizes
        self.classes = tuple(sorted(sizes, key=key))

    def class_of(self, x):
        try:
            return self._rep[x]
        except KeyError:
            raise GroupError(f"{x!r} is outside the enumerated set") from None

    def orbit(self, c) -> list:
        return sorted((y for y, r in self._rep.items() if r == c), key=self.target.sort_key)


class FiniteActorSet(ReidemeisterSet):
    """Infinite target acted on by a finite group; each orbit is finite."""

    def __init__(self, target, actors: Sequence, act: Callable, domain: Callable | None = None):
        self.target = target
        self.finite = False
        self.classes = None
        self.actors = list(actors)
        self.act = act
        self.domain = domain

    def class_of(self, x):
        if self.domain is not None and not self.domain(x):
            raise GroupError(f"{self.target.format(x)} is outside the acted-on subgroup")
        return min((self.act(g, x) for g in self.actors), key=self.target.sort_key)

    def orbit(self, x) -> list:
        return sorted({self.act(g, x) for g in self.actors}, key=self.target.sort_key)

    @cached_property
    def all_singletons(self) -> bool:
        # a x b = x at x = 1 forces b = a^-1; fixing the generators then makes a central
        T = self.target
        probes = [T.identity] + T.generators()
        return all(self.act(g, x) == x for g in self.actors for x in probes)


class LatticeSet(ReidemeisterSet):
    """The quotient ``L2 / M L1`` of a lattice by the image of an integer matrix."""

    def __init__(self, M: IntMatrix, source: Sublattice | None = None, target_lattice: Sublattice | None = None, group: CrystGroup | None = None):
        n = M.nrows
        self.M = M
        self.source_lattice = source or Sublattice.full(M.ncols)
        self.target_lattice = target_lattice or Sublattice.full(n)
        self.group = group
        image = M @ self.source_lattice.columns
        for v in image.T.rows():
            if not self.target_lattice.contains(v):
                raise GroupError(f"image vector {v} escapes the target lattice")
        self.image_basis = column_lattice(image)
        self.rank = self.image_basis.nrows
        self.finite = self.rank == n
        self.free_rank = n - self.rank
        self.degenerate_sectors = () if self.finite else (0,)
        self.target = group

    def _vec(self, x) -> tuple[int, ...]:
        if isinstance(x, CrystElement):
            if self.group is not None and x.h != self.group.holonomy.identity:
                raise GroupError("not a translation")
            return x.m
        return tuple(x)

    def _wrap(self, v):
        return CrystElement(self.group.holonomy.identity, v) if self.group is not None else v

    def canonical_vector(self, x) -> tuple[int, ...]:
        v = self._vec(x)
        if not self.target_lattice.contains(v):
            raise GroupError(f"{v} is not in the target lattice")
        return tuple(int(c) for c in reduce_mod_hnf(self.image_basis, v))

    def class_of(self, x):
        return self._wrap(self.canonical_vector(x))

    @cached_property
    def classes(self):
        if not self.finite:
            return None
        H = self.image_basis
        box = itertools.product(*[range(H[i, i]) for i in range(H.nrows)])
        reps = [v for v in box if self.target_lattice.contains(v)]
        return tuple(self._wrap(tuple(v)) for v in sorted(reps))

    @property
    def order(self) -> int | None:
        if not self.finite:
            return None
        return det(self.image_basis) // self.target_lattice.index

    def format_class(self, c) -> str:
        if self.group is not None:
            return f"[{self.group.format(c)}]"
        v = tuple(c)
        return f"[{v[0]}]" if len(v) == 1 else "[(" + ",".join(map(str, v)) + ")]"


class CrystSet(ReidemeisterSet):
    """Classes for affinely induced homomorphisms into a crystallographic group.

    Lattice moves act in sector ``h`` by ``m -> m + (E - A_h D) v``; the
    remaining action of the source holonomy is applied through the lifts
    ``(0, k)`` and the least image is kept.
    """

    def __init__(self, phi: AffineHom, psi: AffineHom):
        if phi.target is not psi.target or phi.source is not psi.source:
            raise GroupError("homomorphisms must share source and target")
        self.phi, self.psi = phi, psi
        S, T = phi.source, phi.target
        self.target = T
        D, E = phi.linear, psi.linear
        self.sector_matrix = {h: E - T.rotations[h] @ D for h in T.holonomy.elements()}
        self.sector_basis = {h: column_lattice(M) for h, M in self.sector_matrix.items()}
        self.degenerate_sectors = tuple(h for h, M in self.sector_matrix.items() if det(M) == 0)
        self.finite = not self.degenerate_sectors
        self._lifts = [S.holonomy_lift(k) for k in S.holonomy.elements()]
        self._lift_images = [(psi(g), T.inv(phi(g))) for g in self._lifts]

    def _reduce(self, x: CrystElement) -> CrystElement:
        return CrystElement(x.h, tuple(int(c) for c in reduce_mod_hnf(self.sector_basis[x.h], x.m)))

    def class_of(self, x: CrystElement) -> CrystElement:
        T = self.target
        return min(self._reduce(T.mul(T.mul(a, x), b)) for a, b in self._lift_images)

    def sector_representatives(self, h: int) -> list[CrystElement]:
        H = self.sector_basis[h]
        if H.nrows != self.target.dim:
            raise DegenerateSectorError([h])
        return [CrystElement(h, tuple(v)) for v in itertools.product(*[range(H[i, i]) for i in range(H.nrows)])]

    @cached_property
    def classes(self):
        if not self.finite:
            return None
        found = set()
        for h in self.target.holonomy.elements():
            for x in self.sector_representatives(h):
                found.add(self.class_of(x))
        return tuple(sorted(found))

    @cached_property
    def orbit_sizes(self) -> dict:
        """Number of sector elements (lattice classes) folded into each class."""
        sizes: dict = {}
        for h in self.target.holonomy.elements():
            for x in self.sector_representatives(h):
                c = self.class_of(x)
                sizes[c] = sizes.get(c, 0) + 1
        return sizes


def twisted_classes_finite(phi: GroupHom, psi: GroupHom) -> OrbitSet:
    if phi.source is not psi.source or phi.target is not psi.target:
        raise GroupError("homomorphisms must share source and target")
    T = phi.target
    if not isinstance(T, FiniteGroup):
        raise GroupError("target is not finite")
    return _orbit_set(phi, psi)


def _orbit_set(phi, psi) -> OrbitSet:
    S, T = phi.source, phi.target
    gens = list(S.generators) if isinstance(S, FiniteGroup) else S.generators()
    pairs = [(psi(g), T.inv(phi(g))) for g in gens]
    return OrbitSet(T, T.elements(), pairs, lambda p, x: T.mul(T.mul(p[0], x), p[1]))


def twisted_classes_lattice(F, G) -> LatticeSet:
    F, G = IntMatrix(F) if not isinstance(F, IntMatrix) else F, IntMatrix(G) if not isinstance(G, IntMatrix) else G
    if F.shape != G.shape or not F.is_square:
        raise GroupError("need square matrices of equal size")
    return LatticeSet(G - F)


def twisted_classes_cryst(phi: GroupHom, psi: GroupHom) -> ReidemeisterSet:
    S, T = phi.source, phi.target
    if not isinstance(T, CrystGroup):
        raise GroupError("target is not crystallographic")
    if isinstance(S, FiniteGroup):
        pairs = [(psi(g), T.inv(phi(g))) for g in S.elements()]
        return FiniteActorSet(T, pairs, lambda p, x: T.mul(T.mul(p[0], x), p[1]))
    if isinstance(phi, AffineHom) and isinstance(psi, AffineHom):
        return CrystSet(phi, psi)
    raise GroupError("crystallographic source needs affinely induced homomorphisms")


def twisted_classes(phi: GroupHom, psi: GroupHom) -> ReidemeisterSet:
    if isinstance(phi.target, FiniteGroup):
        return twisted_classes_finite(phi, psi)
    return twisted_classes_cryst(phi, psi)


def subgroup_classes(phi: GroupHom, psi: GroupHom, gamma1, gamma2) -> ReidemeisterSet:
    """Classes of Gamma_2 under the restricted pair on Gamma_1."""
    T = phi.target
    if isinstance(gamma2, FiniteSubgroup):
        pairs = [(psi(g), T.inv(phi(g))) for g in gamma1.generators()]
        return OrbitSet(T, gamma2.elements(), pairs, lambda p, x: T.mul(T.mul(p[0], x), p[1]))
    if isinstance(gamma1, LatticeSubgroup):
        if not (isinstance(phi, AffineHom) and isinstance(psi, AffineHom)):
            raise GroupError("lattice covers need affinely induced homomorphisms")
        return LatticeSet(psi.linear - phi.linear, gamma1.lattice, gamma2.lattice, group=T)
    pairs = [(psi(g), T.inv(phi(g))) for g in gamma1.elements()]
    return FiniteActorSet(T, pairs, lambda p, x: T.mul(T.mul(p[0], x), p[1]), domain=gamma2.contains)


# ---------------------------------------------------------------------------
# coincidence subgroups


@dataclass
class CoinSubgroup:
    """``{g : phi(g) = psi(g)}`` as a union of cosets ``K r`` with K generated by lattice translations."""

    source: object
    coset_reps: list
    lattice_gens: list = field(default_factory=list)
    phi: GroupHom | None = None
    psi: GroupHom | None = None

    @property
    def finite(self) -> bool:
        return not self.lattice_gens

    @property
    def order(self) -> int | None:
        return len(self.coset_reps) if self.finite else None

    @property
    def elements(self) -> list:
        if not self.finite:
            raise ValueError("coincidence subgroup is infinite")
        return sorted(self.coset_reps, key=self.source.sort_key)

    def contains(self, x) -> bool:
        if self.phi is None:
            return x in self.coset_reps
        return self.phi(x) == self.psi(x)

    def image_in(self, Q) -> frozenset:
        G = Q.group
        K = G.subgroup(Q.project(t) for t in self.lattice_gens)
        return frozenset(G.mul(k, Q.project(r)) for r in self.coset_reps for k in K)

    def contains_subgroup(self, sub) -> bool:
        return all(self.contains(g) for g in sub.generators())

    def describe(self) -> str:
        S = self.source
        reps = ", ".join(S.format(r) for r in sorted(self.coset_reps, key=S.sort_key))
        if self.finite:
            return "{" + reps + "}"
        gens = ", ".join(S.format(t) for t in self.lattice_gens)
        return f"<{gens}> . {{{reps}}}"


def coin_subgroup(phi: GroupHom, psi: GroupHom) -> CoinSubgroup:
    S, T = phi.source, phi.target
    if isinstance(S, FiniteGroup):
        return CoinSubgroup(S, [g for g in S.elements() if phi(g) == psi(g)], [], phi, psi)
    if isinstance(T, FiniteGroup):
        # phi, psi kill N Z^n; reduce to the finite quotient S / N Z^n
        N = 1
        for t in S.lattice_generators():
            N = math.lcm(N, T.element_order(phi(t)), T.element_order(psi(t)))
        reps = [
            CrystElement(h, m)
            for h in S.holonomy.elements()
            for m in itertools.product(range(N), repeat=S.dim)
        ]
        gens = [S.translation([N * int(i == j) for j in range(S.dim)]) for i in range(S.dim)]
        return CoinSubgroup(S, [r for r in reps if phi(r) == psi(r)], gens, phi, psi)
    if isinstance(phi, AffineHom) and isinstance(psi, AffineHom):
        D, E = phi.linear, psi.linear
        kernel = None
        reps = []
        for k in S.holonomy.elements():
            if phi.holonomy_map[k] != psi.holonomy_map[k]:
                continue
            a, b = phi(S.holonomy_lift(k)), psi(S.holonomy_lift(k))
            sol = integer_solve(E - D, [x - y for x, y in zip(a.m, b.m)])
            if sol is None:
                continue
            m, kernel = sol
            reps.append(CrystElement(k, m))
        if kernel is None:
            kernel = ()
        gens = [S.translation(v) for v in kernel]
        return CoinSubgroup(S, reps, gens, phi, psi)
    raise GroupError("unsupported homomorphism pair for coincidence subgroup")


def coin_subgroup_lattice(F, G) -> CoinSubgroup:
    """Coincidence subgroup of ``v -> F v`` and ``v -> G v`` on Z^n: the kernel of F - G."""
    F = F if isinstance(F, IntMatrix) else IntMatrix(F)
    G = G if isinstance(G, IntMatrix) else IntMatrix(G)
    Z = torus_group(F.ncols)
    gens = [Z.translation(v) for v in integer_kernel(F - G)]
    return CoinSubgroup(Z, [Z.identity], gens)


# ---------------------------------------------------------------------------
# maps between Reidemeister sets


def rho_map(base: ReidemeisterSet, beta, c):
    """``[g]`` in R[tau_beta phi, psi]  ->  ``[g beta]`` in R[phi, psi]."""
    return base.class_of(base.target.mul(c, beta))


class ReidemeisterTower:
    """The sets R[tau_b phi', psi'] -> R[tau_b phi, psi] -> R[tau_b phi-bar, psi-bar] for one b."""

    def __init__(self, phi: GroupHom, psi: GroupHom, gamma1, gamma2, beta):
        self.phi, self.psi = phi, psi
        self.gamma1, self.gamma2 = gamma1, gamma2
        self.beta = beta
        self.phi_b = conjugate_hom(beta, phi)
        self.sub = subgroup_classes(self.phi_b, psi, gamma1, gamma2)
        self.top = twisted_classes(self.phi_b, psi)
        _, self.phibar = restrict_and_descend(self.phi_b, gamma1, gamma2)
        _, self.psibar = restrict_and_descend(psi, gamma1, gamma2)
        self.Q1, self.Q2 = gamma1.quotient, gamma2.quotient
        self.bar = twisted_classes_finite(self.phibar, self.psibar)
        self.beta_bar = self.Q2.project(beta)

    def i_hat(self, c):
        return self.top.class_of(c)

    def u_hat(self, c):
        return self.bar.class_of(self.Q2.project(c))

    @cached_property
    def coin_bar(self) -> CoinSubgroup:
        return coin_subgroup(self.phibar, self.psibar)


def i_hat(tower: ReidemeisterTower, c):
    return tower.i_hat(c)


def u_hat(tower: ReidemeisterTower, c):
    return tower.u_hat(c)


@dataclass
class ExactnessReport:
    surjective: bool
    kernel_matches: bool
    image: list
    kernel: list

    @property
    def ok(self) -> bool:
        return self.surjective and self.kernel_matches


def check_exactness(tower: ReidemeisterTower) -> ExactnessReport:
    for s in (tower.sub, tower.top, tower.bar):
        s.require_finite()
    top_classes = list(tower.top.classes)
    hit = {tower.u_hat(c) for c in top_classes}
    surjective = hit == set(tower.bar.classes)
    one = tower.bar.class_of(tower.Q2.group.identity)
    kernel = sorted({c for c in top_classes if tower.u_hat(c) == one}, key=tower.top.target.sort_key)
    image = sorted({tower.i_hat(c) for c in tower.sub.classes}, key=tower.top.target.sort_key)
    rep = ExactnessReport(surjective, kernel == image, image, kernel)
    if not rep.ok:
        raise IdentityFailure(f"Reidemeister sequence not exact: {rep}")
    return rep


@dataclass
class FiberReport:
    cls: object
    direct: int
    formula: int | None
    coin_bar_order: int
    coin_image_orders: list


def fiber_size(tower: ReidemeisterTower, c) -> FiberReport:
    """Size of the fiber of i-hat over the class ``c``, counted and predicted."""
    tower.sub.require_finite()
    preimages = [s for s in tower.sub.classes if tower.i_hat(s) == c]
    cb = tower.coin_bar.order
    if not preimages:
        return FiberReport(c, 0, None, cb, [])
    orders = []
    for gamma in preimages:
        coin = coin_subgroup(conjugate_hom(gamma, tower.phi_b), tower.psi)
        orders.append(len(coin.image_in(tower.Q1)))
    formulas = set()
    for o in orders:
        if cb % o:
            raise IdentityFailure(f"coin image order {o} does not divide {cb}")
        formulas.add(cb // o)
    if formulas != {len(preimages)}:
        raise IdentityFailure(f"fiber over {c}: counted {len(preimages)}, index formula gives {sorted(formulas)}")
    return FiberReport(c, len(preimages), len(preimages), cb, orders)


@dataclass
class OrbitStabilizerRow:
    cls: object
    class_size: int
    coin_order: int
    product: int


def orbit_stabilizer_identity(phibar: GroupHom, psibar: GroupHom, beta_bar=None) -> list[OrbitStabilizerRow]:
    """``|source| = #[b] * #coin(tau_b phibar, psibar)`` for one class or for all."""
    R = twisted_classes_finite(phibar, psibar)
    S = phibar.source
    T = phibar.target
    reps = R.classes if beta_bar is None else [beta_bar]
    rows = []
    for b in reps:
        size = R.orbit_sizes[R.class_of(b)]
        coin = coin_subgroup(conjugate_hom(b, phibar), psibar)
        row = OrbitStabilizerRow(b, size, coin.order, size * coin.order)
        if row.product != S.order:
            raise IdentityFailure(f"orbit-stabilizer fails at {T.format(b)}: {size}*{coin.order} != {S.order}")
        rows.append(row)
    return rows
