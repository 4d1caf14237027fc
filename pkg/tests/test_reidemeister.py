import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coinrt.bundles import circle_3_1, g2_endo
from coinrt.group_models import (
    CrystElement,
    FiniteSubgroup,
    GroupError,
    LatticeSubgroup,
    Sublattice,
    TableHom,
    all_homomorphisms,
    cyclic_group,
    direct_product,
    example1_bundle,
    example2_bundle,
    symmetric_group,
    torus_group,
)
from coinrt.lattice_alg import IntMatrix, det
from coinrt.reidemeister import (
    DegenerateSectorError,
    FiniteActorSet,
    LatticeSet,
    ReidemeisterTower,
    check_exactness,
    coin_subgroup,
    coin_subgroup_lattice,
    fiber_size,
    i_hat,
    orbit_stabilizer_identity,
    rho_map,
    twisted_classes,
    twisted_classes_cryst,
    twisted_classes_finite,
    twisted_classes_lattice,
    u_hat,
)
from coinrt.trace_geometry import AffineMapSpec, sector_matrices


def identity_hom(G):
    return TableHom(G, G, list(G.elements()))


def brute_force_classes(phi, psi):
    """Orbits of x -> psi(g) x phi(g)^-1 over every source element g."""
    S, T = phi.source, phi.target
    left = set(T.elements())
    out = []
    while left:
        x = min(left)
        orbit = {T.mul(T.mul(psi(g), x), T.inv(phi(g))) for g in S.elements()}
        out.append(orbit)
        left -= orbit
    return out


# finite targets


@pytest.mark.parametrize("k", [1, 2, 3, 5, 6])
def test_identity_pair_on_abelian_group_gives_singletons(k):
    Z = cyclic_group(k)
    R = twisted_classes_finite(identity_hom(Z), identity_hom(Z))
    assert len(R) == k
    assert all(size == 1 for size in R.orbit_sizes.values())


def test_first_worked_example_quotient_pair_has_one_class():
    Z2 = cyclic_group(2, ["1", "β"])
    R = twisted_classes_finite(identity_hom(Z2), TableHom(Z2, Z2, [0, 0]))
    assert R.classes == (0,)
    assert R.orbit(0) == [0, 1]


def test_identity_pair_on_z2():
    Z2 = cyclic_group(2, ["1", "α"])
    R = twisted_classes_finite(identity_hom(Z2), identity_hom(Z2))
    assert [R.format_class(c) for c in R.classes] == ["[1]", "[α]"]


def test_finite_mismatched_homs_rejected():
    with pytest.raises(GroupError):
        twisted_classes_finite(identity_hom(cyclic_group(2)), identity_hom(cyclic_group(3)))


PAIRS = [
    (G, H, phi, psi)
    for G, H in [
        (cyclic_group(6), symmetric_group(3)),
        (symmetric_group(3), symmetric_group(3)),
        (direct_product(cyclic_group(2), cyclic_group(2)), cyclic_group(4)),
        (cyclic_group(4), cyclic_group(6)),
    ]
    for phi, psi in itertools.product(all_homomorphisms(G, H), repeat=2)
]


@pytest.mark.parametrize("case", range(0, len(PAIRS), 7))
def test_finite_classes_match_brute_force(case):
    _, H, phi, psi = PAIRS[case]
    R = twisted_classes_finite(phi, psi)
    orbits = brute_force_classes(phi, psi)
    assert sorted(map(sorted, orbits)) == sorted(R.orbit(c) for c in R.classes)
    assert sum(R.orbit_sizes.values()) == H.order
    assert all(min(R.orbit(c)) == c for c in R.classes)


# lattice and crystallographic targets


def test_lattice_circle_degrees():
    R = twisted_classes_lattice([[3]], [[1]])
    assert R.classes == ((0,), (1,))
    assert R.class_of((7,)) == (1,)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lattice_equal_maps_infinite(n):
    F = IntMatrix([[i + j for j in range(n)] for i in range(n)])
    R = twisted_classes_lattice(F, F)
    assert not R.finite and R.free_rank == n
    with pytest.raises(ValueError):
        len(R)


def test_lattice_rotation():
    R = twisted_classes_lattice([[0, -1], [1, 0]], IntMatrix.identity(2))
    assert len(R) == 2 == R.order


def test_lattice_rejects_shape_mismatch():
    with pytest.raises(GroupError):
        twisted_classes_lattice([[1]], [[1, 0], [0, 1]])


def test_second_worked_example_classes_are_singletons():
    b = example2_bundle()
    R = twisted_classes_cryst(b.phi, b.psi)
    assert isinstance(R, FiniteActorSet)
    assert not R.finite and R.all_singletons
    for h in (0, 1):
        for m in itertools.product(range(-2, 3), repeat=3):
            x = CrystElement(h, m)
            assert R.class_of(x) == x


def test_nontrivial_action_is_not_all_singletons():
    # conjugation by alpha moves t2, so a finite group acting through alpha has larger orbits
    G = example2_bundle().pi2
    a = G.holonomy_lift(1)
    R = FiniteActorSet(G, [(G.identity, G.identity), (a, G.inv(a))], lambda p, x: G.mul(G.mul(p[0], x), p[1]))
    assert not R.all_singletons
    assert len(R.orbit(G.translation((0, 1, 0)))) == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), min_size=n, max_size=n),
    st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), min_size=n, max_size=n),
)))
def test_torus_target_agrees_with_lattice(pair):
    F, Gm = IntMatrix(pair[0]), IntMatrix(pair[1])
    if det(Gm - F) == 0:
        return
    T = torus_group(F.nrows)
    f, g = AffineMapSpec.linear_map(T, F), AffineMapSpec.linear_map(T, Gm)
    R = twisted_classes_cryst(f.hom, g.hom)
    L = twisted_classes_lattice(F, Gm)
    assert [c.m for c in R.classes] == list(L.classes)


def deep_quotient_class_count(f, g, N):
    """Twisted orbits in Pi / N Z^n, by breadth-first search over the full quotient."""
    G = f.source
    elems = [CrystElement(h, m) for h in G.holonomy.elements() for m in itertools.product(range(N), repeat=G.dim)]

    def red(x):
        return CrystElement(x.h, tuple(v % N for v in x.m))

    pairs = [(g.hom(s), G.inv(f.hom(s))) for s in G.generators()]
    seen, count = set(), 0
    for x in elems:
        if x in seen:
            continue
        count += 1
        seen.add(x)
        stack = [x]
        while stack:
            y = stack.pop()
            for a, b in pairs:
                z = red(G.mul(G.mul(a, y), b))
                if z not in seen:
                    seen.add(z)
                    stack.append(z)
    return count


def test_g2_endomorphism_classes_match_deep_quotient():
    b = g2_endo()
    R = twisted_classes_cryst(b.f.hom, b.g.hom)
    assert R.finite
    # N Z^3 lies inside every sector image once N is a multiple of each |det|
    N = math.lcm(*(abs(det(M)) for M in sector_matrices(b.f, b.g).values()))
    assert N == 10
    assert len(R.classes) == deep_quotient_class_count(b.f, b.g, N) == 6


def test_degenerate_sector_reported():
    G = g2_endo().f.source
    f = AffineMapSpec.identity(G)
    R = twisted_classes_cryst(f.hom, f.hom)
    # I - I and I - diag(1,-1,-1) are both singular
    assert not R.finite and R.degenerate_sectors == (0, 1)
    with pytest.raises(DegenerateSectorError) as exc:
        R.require_finite()
    assert exc.value.sectors == (0, 1)


def circle_data():
    b = circle_3_1()
    return b.f, b.g, b.f.source


def random_element(rng, G):
    return CrystElement(rng.randrange(G.holonomy.order), tuple(rng.randint(-5, 5) for _ in range(G.dim)))


def g2_data():
    b = g2_endo()
    return b.f, b.g, b.f.source


@pytest.mark.parametrize("maker", [circle_data, g2_data])
def test_class_of_is_constant_on_orbits(maker):
    f, g, G = maker()
    R = twisted_classes_cryst(f.hom, g.hom)
    rng = random.Random(5)
    for _ in range(1000):
        x, gam = random_element(rng, G), random_element(rng, G)
        y = G.mul(G.mul(g.hom(gam), x), G.inv(f.hom(gam)))
        assert R.class_of(y) == R.class_of(x)


# coincidence subgroups


def test_coin_equal_homs_is_whole_group():
    S3 = symmetric_group(3)
    phi = all_homomorphisms(S3, S3)[3]
    assert coin_subgroup(phi, phi).order == S3.order


def test_coin_first_worked_example():
    b = example1_bundle()
    coin = coin_subgroup(b.phi, b.psi)
    assert coin.contains_subgroup(b.gamma1)
    assert all(b.gamma1.contains(x) for x in coin.coset_reps + coin.lattice_gens)
    assert not coin.contains(b.pi1.holonomy_lift(1))
    tower = ReidemeisterTower(b.phi, b.psi, b.gamma1, b.gamma2, b.pi2.identity)
    assert tower.coin_bar.elements == [tower.Q1.group.identity]
    assert tower.coin_bar.describe() == "{1̄}"


def test_coin_lattice_trivial():
    coin = coin_subgroup_lattice([[3]], [[1]])
    assert coin.finite and coin.order == 1


def test_coin_lattice_kernel():
    coin = coin_subgroup_lattice([[1, 2], [0, 1]], IntMatrix.identity(2))
    assert not coin.finite
    assert [g.m for g in coin.lattice_gens] in ([(1, 0)], [(-1, 0)])


def test_coin_affine_pair():
    f, g, G = circle_data()
    coin = coin_subgroup(f.hom, g.hom)
    assert coin.finite and coin.coset_reps == [G.identity]


# maps between class sets


def test_rho_identity():
    f, g, G = circle_data()
    R = twisted_classes_cryst(f.hom, g.hom)
    assert [rho_map(R, G.identity, c) for c in R.classes] == list(R.classes)


def test_rho_circle_shift():
    f, g, G = circle_data()
    R = twisted_classes_cryst(f.hom, g.hom)
    one = G.translation((1,))
    top = twisted_classes_cryst(AffineMapSpec.left_compose(f, one).hom, g.hom)
    images = {c.m: rho_map(R, one, c).m for c in top.classes}
    assert images == {(0,): (1,), (1,): (0,)}


def test_rho_first_worked_example():
    b = example1_bundle()
    R = twisted_classes(b.phi, b.psi)
    assert rho_map(R, 1, 0) == 0 == R.class_of(1)


def test_i_hat_full_lattice_is_identity():
    f, g, G = circle_data()
    L = LatticeSubgroup(G, Sublattice.full(1))
    tower = ReidemeisterTower(f.hom, g.hom, L, L, G.identity)
    assert [i_hat(tower, c) for c in tower.sub.classes] == list(tower.top.classes)


def test_i_hat_double_cover():
    f, g, G = circle_data()
    L = LatticeSubgroup(G, Sublattice.scaled(1, 2))
    tower = ReidemeisterTower(f.hom, g.hom, L, L, G.identity)
    assert isinstance(tower.sub, LatticeSet)
    assert [c.m for c in tower.sub.classes] == [(0,), (2,)]
    assert {i_hat(tower, c).m for c in tower.sub.classes} == {(0,)}


def test_u_hat_double_cover():
    f, g, G = circle_data()
    L = LatticeSubgroup(G, Sublattice.scaled(1, 2))
    tower = ReidemeisterTower(f.hom, g.hom, L, L, G.identity)
    Q = tower.Q2.group
    assert [Q.format(u_hat(tower, c)) for c in tower.top.classes] == ["0̄", "1̄"]


def test_u_hat_trivial_subgroup_is_identity_like():
    S3 = symmetric_group(3)
    phi = all_homomorphisms(S3, S3)[-1]
    triv = FiniteSubgroup(S3, [S3.identity])
    tower = ReidemeisterTower(phi, identity_hom(S3), triv, triv, S3.identity)
    assert len(tower.bar) == len(tower.top)
    assert len({u_hat(tower, c) for c in tower.top.classes}) == len(tower.top)


def test_first_worked_example_tower():
    b = example1_bundle()
    for beta in b.pi2.elements():
        tower = ReidemeisterTower(b.phi, b.psi, b.gamma1, b.gamma2, beta)
        assert [i_hat(tower, c) for c in tower.sub.classes] == [0]
        assert tower.top.orbit(0) == [0, 1]
        assert [tower.Q2.group.format(u_hat(tower, c)) for c in tower.top.classes] == ["1̄"]
        assert tower.bar.orbit(tower.bar.classes[0]) == [0, 1]


# exactness and counting identities


def test_exactness_first_worked_example():
    b = example1_bundle()
    rep = check_exactness(ReidemeisterTower(b.phi, b.psi, b.gamma1, b.gamma2, 1))
    assert rep.ok and rep.image == rep.kernel == [0]


def test_exactness_circle_double_cover():
    f, g, G = circle_data()
    L = LatticeSubgroup(G, Sublattice.scaled(1, 2))
    for beta in (G.identity, G.translation((1,))):
        rep = check_exactness(ReidemeisterTower(f.hom, g.hom, L, L, beta))
        assert rep.surjective and rep.kernel_matches


def test_exactness_needs_finite_sets():
    b = example2_bundle()
    tower = ReidemeisterTower(b.phi, b.psi, b.gamma1, b.gamma2, b.pi2.identity)
    with pytest.raises(ValueError):
        check_exactness(tower)


def test_fiber_full_subgroup_is_one():
    f, g, G = circle_data()
    L = LatticeSubgroup(G, Sublattice.full(1))
    tower = ReidemeisterTower(f.hom, g.hom, L, L, G.identity)
    assert all(fiber_size(tower, c).direct == 1 for c in tower.top.classes)


def test_fiber_circle_double_cover():
    f, g, G = circle_data()
    L = LatticeSubgroup(G, Sublattice.scaled(1, 2))
    tower = ReidemeisterTower(f.hom, g.hom, L, L, G.identity)
    zero, one = tower.top.classes
    r = fiber_size(tower, zero)
    assert (r.direct, r.formula, r.coin_bar_order) == (2, 2, 2)
    assert fiber_size(tower, one).direct == 0


def test_fiber_first_worked_example():
    b = example1_bundle()
    tower = ReidemeisterTower(b.phi, b.psi, b.gamma1, b.gamma2, b.pi2.identity)
    r = fiber_size(tower, 0)
    assert (r.direct, r.formula) == (1, 1)


def test_orbit_stabilizer_identity_pair():
    Z2 = cyclic_group(2)
    rows = orbit_stabilizer_identity(identity_hom(Z2), identity_hom(Z2))
    assert [(r.class_size, r.coin_order) for r in rows] == [(1, 2), (1, 2)]


def test_orbit_stabilizer_first_worked_example():
    Z2 = cyclic_group(2)
    (row,) = orbit_stabilizer_identity(identity_hom(Z2), TableHom(Z2, Z2, [0, 0]), 1)
    assert (row.class_size, row.coin_order, row.product) == (2, 1, 2)


def test_orbit_stabilizer_all_endomorphisms_of_z6():
    Z6 = cyclic_group(6)
    homs = all_homomorphisms(Z6, Z6)
    assert len(homs) == 6
    for phi, psi in itertools.product(homs, repeat=2):
        rows = orbit_stabilizer_identity(phi, psi)
        assert all(r.product == 6 for r in rows)
        assert sum(r.class_size for r in rows) == 6


def finite_instances(seed, count):
    rng = random.Random(seed)
    groups = [cyclic_group(4), cyclic_group(6), symmetric_group(3), direct_product(cyclic_group(2), cyclic_group(2))]
    out = []
    while len(out) < count:
        G, H = rng.choice(groups), rng.choice(groups)
        homs = all_homomorphisms(G, H)
        phi, psi = rng.choice(homs), rng.choice(homs)
        N2 = rng.choice(H.normal_subgroups)
        ok = [N for N in G.normal_subgroups if all(phi(x) in N2 and psi(x) in N2 for x in N)]
        out.append((phi, psi, FiniteSubgroup(G, rng.choice(ok)), FiniteSubgroup(H, N2)))
    return out


@pytest.mark.parametrize("inst", finite_instances(11, 100))
def test_random_finite_identities(inst):
    phi, psi, g1, g2 = inst
    H = phi.target
    base = twisted_classes(phi, psi)
    for gam in g2.elements():
        for beta in H.elements():
            gb = H.mul(gam, beta)
            t_gb = ReidemeisterTower(phi, psi, g1, g2, gb)
            t_b = ReidemeisterTower(phi, psi, g1, g2, beta)
            assert check_exactness(t_gb).ok
            for c in t_gb.top.classes:
                r = fiber_size(t_gb, c)
                assert r.direct == 0 or r.direct == r.formula
            # rho_{gamma beta} o i^{gamma beta} = rho_beta o i^beta o rho_gamma
            for c in t_gb.sub.classes:
                lhs = rho_map(base, gb, i_hat(t_gb, c))
                rhs = rho_map(base, beta, i_hat(t_b, t_b.sub.class_of(H.mul(c, gam))))
                assert lhs == rhs


@pytest.mark.parametrize("inst", finite_instances(12, 20))
def test_rho_is_bijection(inst):
    phi, psi, _, _ = inst
    H = phi.target
    base = twisted_classes(phi, psi)
    for beta in H.elements():
        top = twisted_classes(TableHom(phi.source, H, [H.mul(H.mul(beta, phi(x)), H.inv(beta)) for x in phi.source.elements()]), psi)
        images = [rho_map(base, beta, c) for c in top.classes]
        assert sorted(images) == sorted(base.classes)
        # right multiplication by beta^-1 undoes it
        back = {rho_map(top, H.inv(beta), k) for k in images}
        assert back == set(top.classes)
