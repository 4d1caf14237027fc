import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coinrt.group_models import (
    AffineHom,
    ContainmentError,
    CrystElement,
    FiniteGroup,
    FiniteSubgroup,
    GroupError,
    LatticeSubgroup,
    Sublattice,
    TableHom,
    all_homomorphisms,
    builtin_catalog,
    conjugate_hom,
    cyclic_group,
    direct_product,
    example1_bundle,
    example2_bundle,
    finite_quotient,
    g2_bieberbach,
    restrict_and_descend,
    symmetric_group,
    torus_group,
    trivial_hom,
    validate_cryst,
    validate_hom,
)
from coinrt.lattice_alg import IntMatrix
from coinrt.trace_geometry import AffineMapSpec

G2 = g2_bieberbach()
ALPHA = G2.holonomy_lift(1)


def t(*v):
    return G2.translation(v)


cryst_elements = st.builds(
    lambda h, m: CrystElement(h, tuple(m)),
    st.integers(0, 1),
    st.lists(st.integers(-4, 4), min_size=3, max_size=3),
)


# multiplication


def test_alpha_squared_is_t1():
    assert G2.mul(ALPHA, ALPHA) == t(1, 0, 0)


def test_alpha_inverts_t2_and_t3():
    assert G2.mul(G2.mul(ALPHA, t(0, 1, 0)), G2.inv(ALPHA)) == G2.inv(t(0, 1, 0))
    assert G2.mul(G2.mul(ALPHA, t(0, 0, 1)), G2.inv(ALPHA)) == t(0, 0, -1)


def test_torus_product_adds():
    T = torus_group(2)
    assert T.mul(T.translation((1, 2)), T.translation((3, -5))) == T.translation((4, -3))


@given(cryst_elements, cryst_elements, cryst_elements)
def test_g2_associative(x, y, z):
    assert G2.mul(G2.mul(x, y), z) == G2.mul(x, G2.mul(y, z))


@given(cryst_elements)
def test_g2_inverse(x):
    assert G2.mul(x, G2.inv(x)) == G2.identity == G2.mul(G2.inv(x), x)


@given(cryst_elements, cryst_elements)
def test_g2_product_is_composition_of_affine_maps(x, y):
    p = (Fraction(1, 7), Fraction(2, 5), Fraction(-3, 4))
    assert G2.act(G2.mul(x, y), p) == G2.act(x, G2.act(y, p))


def test_format_and_word():
    assert G2.format(ALPHA) == "(0,0,0).α"
    assert G2.word("alpha t2 alpha^-1") == t(0, -1, 0)


# validation of crystallographic data


def test_g2_valid_and_orientable():
    rep = validate_cryst(G2)
    assert rep
    assert rep.info["orientable"] and rep.info["torsion_free"]


def test_torus_valid():
    assert validate_cryst(torus_group(3))


def test_corrupted_screw_translation_is_reported():
    bad = g2_bieberbach(s_alpha=(0, 0, 0))
    rep = validate_cryst(bad)
    assert not rep
    # alpha^2 becomes the identity: the group has torsion and alpha^2 = t1 fails
    assert bad.mul(bad.holonomy_lift(1), bad.holonomy_lift(1)) == bad.identity
    assert any("torsion" in v for v in rep.violations)
    assert any("alpha^2 = t1" in v for v in rep.violations)


def test_non_integral_cocycle_is_reported():
    bad = g2_bieberbach(s_alpha=(Fraction(1, 3), 0, 0))
    rep = validate_cryst(bad)
    assert not rep
    assert "cocycle" in rep.first_violation


def test_klein_bottle_group_is_not_orientable():
    from coinrt.group_models import CrystGroup

    K = CrystGroup(2, cyclic_group(2), [IntMatrix.identity(2), IntMatrix.diag([1, -1])], [(0, 0), (Fraction(1, 2), 0)])
    rep = validate_cryst(K)
    assert rep and not rep.info["orientable"]


def test_finite_group_table_checks():
    with pytest.raises(GroupError):
        FiniteGroup([[0, 1], [1, 0], [0, 0]])
    with pytest.raises(GroupError):
        FiniteGroup([[1, 1], [1, 1]])
    assert symmetric_group(3).validate()


# homomorphisms


def test_trivial_map_into_g2_is_valid():
    assert validate_hom(trivial_hom(cyclic_group(2), G2))


@pytest.mark.parametrize("n", list(itertools.product(range(-2, 3), repeat=3)))
def test_screw_candidates_rejected(n):
    Z2 = cyclic_group(2)
    xi_b = G2.mul(G2.translation(n), ALPHA)
    rep = validate_hom(TableHom(Z2, G2, [G2.identity, xi_b]))
    assert not rep
    a, b, lhs, rhs = rep.info["witness"]
    assert (a, b) == (1, 1)
    assert lhs == G2.identity
    assert rhs == t(2 * n[0] + 1, 0, 0)


def test_translation_candidates_rejected_too():
    # xi(beta) = t^n with n != 0 squares to t^(2n) != 1
    Z2 = cyclic_group(2)
    for n in itertools.product(range(-1, 2), repeat=3):
        ok = bool(validate_hom(TableHom(Z2, G2, [G2.identity, G2.translation(n)])))
        assert ok == (n == (0, 0, 0))


def test_identity_endomorphism_valid():
    assert validate_hom(AffineMapSpec.identity(G2).hom)


def test_affine_hom_compatibility_failure():
    # D must commute with the holonomy action; a shear does not
    bad = AffineHom(G2, G2, [[1, 1, 0], [0, 1, 0], [0, 0, 1]], (0, 0, 0), (0, 1))
    assert not validate_hom(bad)


def _brute_force_hom_count(G, H):
    count = 0
    for images in itertools.product(H.elements(), repeat=G.order):
        if all(images[G.mul(a, b)] == H.mul(images[a], images[b]) for a in G.elements() for b in G.elements()):
            count += 1
    return count


@pytest.mark.parametrize(
    "G, H",
    [
        (cyclic_group(2), cyclic_group(4)),
        (cyclic_group(4), cyclic_group(2)),
        (cyclic_group(3), symmetric_group(3)),
        (cyclic_group(4), direct_product(cyclic_group(2), cyclic_group(2))),
        (direct_product(cyclic_group(2), cyclic_group(2)), cyclic_group(4)),
        (cyclic_group(6), cyclic_group(3)),
    ],
)
def test_all_homomorphisms_matches_brute_force(G, H):
    homs = all_homomorphisms(G, H)
    assert len(homs) == _brute_force_hom_count(G, H)
    assert len({h.images for h in homs}) == len(homs)
    assert all(validate_hom(h) for h in homs)


@pytest.mark.parametrize(
    "G, H, count",
    [
        (symmetric_group(3), symmetric_group(3), 10),
        (cyclic_group(6), symmetric_group(3), 6),
        (direct_product(cyclic_group(2), cyclic_group(2)), symmetric_group(3), 10),
        (symmetric_group(3), cyclic_group(3), 1),
    ],
)
def test_all_homomorphisms_known_counts(G, H, count):
    assert len(all_homomorphisms(G, H)) == count


# quotients


def test_g2_mod_translations_is_holonomy():
    Q = finite_quotient(G2, Sublattice.full(3))
    assert Q.group.order == 2
    assert [Q.group.format(i) for i in Q.group.elements()] == ["1̄", "ᾱ"]
    assert Q.project(t(5, -1, 2)) == Q.group.identity
    assert Q.project(G2.mul(t(1, 1, 1), ALPHA)) != Q.group.identity


def test_circle_double_cover_quotient():
    Q = finite_quotient(torus_group(1), Sublattice.scaled(1, 2))
    assert Q.group.order == 2


def test_torus_quotient_by_2z2_is_klein_four():
    Q = finite_quotient(torus_group(2), Sublattice.scaled(2, 2))
    G = Q.group
    assert G.order == 4
    assert all(G.mul(x, x) == G.identity for x in G.elements())


def test_g2_deep_quotient_respects_multiplication():
    L = Sublattice.scaled(3, 2)
    Q = finite_quotient(G2, L)
    assert Q.group.order == 16
    elems = [CrystElement(h, m) for h in (0, 1) for m in itertools.product(range(-1, 2), repeat=3)]
    for x, y in itertools.product(elems[::3], repeat=2):
        assert Q.project(G2.mul(x, y)) == Q.group.mul(Q.project(x), Q.project(y))


def test_non_invariant_lattice_rejected():
    L = Sublattice.from_generators([[1, 1, 0], [0, 3, 0], [0, 0, 1]])
    with pytest.raises(ContainmentError) as exc:
        finite_quotient(G2, L)
    assert not L.contains(exc.value.witness)


def test_sublattice_rank_and_invariance():
    with pytest.raises(GroupError):
        Sublattice.from_generators([[1, 0], [2, 0]])
    with pytest.raises(ContainmentError):
        Sublattice.from_generators([[1, 1], [0, 3]], invariant_under=[IntMatrix.diag([1, -1])])
    assert Sublattice.from_generators([[2, 1], [0, 1]]).index == 2


# conjugation and descent


def test_conjugate_by_identity_is_unchanged():
    phi = AffineMapSpec.linear_map(G2, IntMatrix.diag([3, 1, 1])).hom
    psi = conjugate_hom(G2.identity, phi)
    for g in G2.generators():
        assert psi(g) == phi(g)


def test_conjugate_into_abelian_target_is_unchanged():
    b = example1_bundle()
    for beta in b.pi2.elements():
        c = conjugate_hom(beta, b.phi)
        assert all(c(g) == b.phi(g) for g in G2.generators())


def test_conjugating_inclusion_by_alpha():
    T3 = torus_group(3)
    incl = AffineHom(T3, G2, IntMatrix.identity(3), (0, 0, 0), (0,))
    assert validate_hom(incl)
    c = conjugate_hom(ALPHA, incl)
    assert validate_hom(c)
    for v in itertools.product(range(-2, 3), repeat=3):
        assert c(T3.translation(v)) == t(v[0], -v[1], -v[2])


def test_descend_times_three_on_double_cover():
    Z = torus_group(1)
    phi = AffineMapSpec.linear_map(Z, [[3]]).hom
    L = LatticeSubgroup(Z, Sublattice.scaled(1, 2))
    prime, bar = restrict_and_descend(phi, L, L)
    assert bar.images == (0, 1)
    assert prime(Z.translation((2,))) == Z.translation((6,))


def test_descend_trivial():
    Z = torus_group(1)
    phi = AffineMapSpec.linear_map(Z, [[0]]).hom
    L = LatticeSubgroup(Z, Sublattice.scaled(1, 2))
    prime, bar = restrict_and_descend(phi, L, L)
    assert bar.images == (0, 0)
    assert prime(Z.translation((2,))) == Z.identity


def test_descend_first_worked_example():
    b = example1_bundle()
    prime, bar = restrict_and_descend(b.phi, b.gamma1, b.gamma2)
    # the quotient map is Z2 -> Z2 sending the generator to beta
    assert sorted(bar.images) == [0, 1]
    assert bar(b.gamma1.quotient.project(ALPHA)) == b.gamma2.quotient.project(1)
    assert all(prime(g) == b.pi2.identity for g in b.gamma1.generators())
    _, psibar = restrict_and_descend(b.psi, b.gamma1, b.gamma2)
    assert psibar.images == (0, 0)


def test_descend_reports_containment_witness():
    Z = torus_group(1)
    phi = AffineMapSpec.identity(Z).hom
    with pytest.raises(ContainmentError) as exc:
        restrict_and_descend(phi, LatticeSubgroup(Z, Sublattice.full(1)), LatticeSubgroup(Z, Sublattice.scaled(1, 2)))
    assert exc.value.witness == (Z.translation((1,)), Z.translation((1,)))


def test_descend_finite_groups():
    Z6, Z3 = cyclic_group(6), cyclic_group(3)
    phi = TableHom(Z6, Z3, [x % 3 for x in range(6)])
    g1 = FiniteSubgroup(Z6, [0, 3])
    g2 = FiniteSubgroup(Z3, [0])
    _, bar = restrict_and_descend(phi, g1, g2)
    assert bar.source.order == 3 and validate_hom(bar)


# catalog


def test_catalog_entries():
    assert builtin_catalog("torus_3").dim == 3
    assert builtin_catalog("g2_bieberbach").holonomy.order == 2
    assert builtin_catalog("cyclic_2").order == 2
    b1, b2 = builtin_catalog("example1_bundle"), builtin_catalog("example2_bundle")
    assert (b1.pi1.name, b1.pi2.order) == ("G2", 2)
    assert (b2.pi1.order, b2.pi2.name) == (2, "G2")


@pytest.mark.parametrize("name", ["torus_7", "torus_0", "klein", ""])
def test_catalog_rejects_unknown(name):
    with pytest.raises(KeyError):
        builtin_catalog(name)


def test_first_worked_example_homomorphisms():
    b = example1_bundle()
    assert validate_hom(b.phi) and validate_hom(b.psi)
    assert b.phi(ALPHA) == 1
    assert all(b.phi(g) == 0 for g in G2.lattice_generators())
    assert all(b.psi(g) == 0 for g in G2.generators())


def test_second_worked_example_homomorphisms_trivial():
    b = example2_bundle()
    assert all(b.phi(x) == G2.identity == b.psi(x) for x in b.pi1.elements())
