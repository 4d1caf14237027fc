"""Command-line front end.

Exit status: 0 when every exact identity checked in the run holds, 1 when one
fails, 2 for unusable input. Output is assembled in full before anything is
printed, so an input error never leaves a partial report behind.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from typing import Sequence

from . import __version__
from .acceptance import CRITERIA, chain_strings
from .averaging import (
    ModeError,
    algebraic_mode_verify,
    average_index,
    average_lefschetz,
    average_rt_coincidence,
    average_rt_fixed,
    geometric_cover,
    validate_cover,
)
from .bundles import AlgebraicCase, GeometricBundle, example_names, load_bundle, load_example
from .formats import InputError
from .group_models import ContainmentError, GroupError, LatticeSubgroup
from .reidemeister import (
    IdentityFailure,
    ReidemeisterTower,
    check_exactness,
    coin_subgroup,
    fiber_size,
    orbit_stabilizer_identity,
    twisted_classes,
)
from .trace_geometry import (
    BoundaryCoincidenceError,
    DegeneratePairError,
    NonorientableError,
    oracle_agrees,
    oracle_coincidences,
    reidemeister_trace,
)

REPORT_SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

INPUT_ERRORS = (InputError, GroupError, ContainmentError, DegeneratePairError, NonorientableError, ModeError, BoundaryCoincidenceError, KeyError)


class Report:
    def __init__(self, command: str, bundle: str):
        self.command = command
        self.bundle = bundle
        self.lines: list[str] = []
        self.checks: list[dict] = []
        self.data: dict = {}

    def say(self, text: str = "") -> None:
        self.lines.append(text)

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append({"check": name, "status": "pass" if ok else "fail", **({"detail": detail} if detail else {})})
        self.say(f"  [{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail and not ok else ""))
        return ok

    @property
    def passed(self) -> bool:
        return all(c["status"] == "pass" for c in self.checks)

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "bundle": self.bundle,
            "status": "pass" if self.passed else "fail",
            "checks": self.checks,
            **self.data,
        }


def parse_sweep(text: str) -> list[int]:
    """``"a..b"`` (inclusive) or a comma-separated list of integers."""
    text = text.replace("−", "-").strip()
    m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if a > b:
            raise InputError(f"empty sweep range {text!r}")
        return list(range(a, b + 1))
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"bad sweep {text!r}; use a..b or a,b,c") from None


def _load(args) -> GeometricBundle | AlgebraicCase:
    if bool(args.example) == bool(args.bundle):
        raise InputError("give exactly one of --example or --bundle")
    b = load_example(args.example) if args.example else load_bundle(args.bundle)
    mode = "geometric" if isinstance(b, GeometricBundle) else "algebraic"
    if args.mode and args.mode != mode:
        raise InputError(f"bundle {b.name!r} is {mode}, not {args.mode}")
    return b


def _tower_checks(rep: Report, tower: ReidemeisterTower, label: str) -> None:
    ok = True
    try:
        check_exactness(tower)
    except IdentityFailure as exc:
        ok = False
        rep.check(f"exactness at {label}", False, str(exc))
    if ok:
        rep.check(f"exactness at {label}", True)
    bad = []
    for c in tower.top.classes:
        try:
            fiber_size(tower, c)
        except IdentityFailure as exc:
            bad.append(str(exc))
    rep.check(f"fiber sizes at {label}", not bad, "; ".join(bad))
    try:
        orbit_stabilizer_identity(tower.phibar, tower.psibar)
        rep.check(f"orbit-stabilizer counts at {label}", True)
    except IdentityFailure as exc:
        rep.check(f"orbit-stabilizer counts at {label}", False, str(exc))


def _coin_text(coin, gamma1=None) -> str:
    if gamma1 is not None and coin.contains_subgroup(gamma1) and all(gamma1.contains(g) for g in [*coin.coset_reps, *coin.lattice_gens]):
        return "Γ₁"
    return coin.describe()


def cmd_reidemeister(b, args) -> Report:
    rep = Report("reidemeister", b.name)
    if isinstance(b, GeometricBundle):
        phi, psi = b.f.hom, b.g.hom
        gamma1, gamma2 = LatticeSubgroup(b.f.source, b.L1), LatticeSubgroup(b.f.target, b.L2)
    else:
        phi, psi = b.bundle.phi, b.bundle.psi
        gamma1, gamma2 = b.bundle.gamma1, b.bundle.gamma2
    T = phi.target
    R = twisted_classes(phi, psi)
    rep.say(f"bundle {b.name}")
    if R.finite:
        rep.say(f"R[φ,ψ]: {len(R.classes)} classes")
        rep.say("  " + ", ".join(R.format_class(c) for c in R.classes))
        rep.data["classes"] = [R.format_class(c) for c in R.classes]
    else:
        kind = "every class a singleton" if getattr(R, "all_singletons", False) else "infinitely many classes"
        rep.say(f"R[φ,ψ]: infinite ({kind})")
        rep.data["classes"] = "infinite"
    coin = coin_subgroup(phi, psi)
    rep.say(f"coin(φ,ψ) = {_coin_text(coin, gamma1)}")
    cover = validate_cover(phi, psi, gamma1, gamma2)
    for i in cover.Q2.group.elements():
        beta = cover.coset_reps[i]
        tower = ReidemeisterTower(phi, psi, gamma1, gamma2, beta)
        label = f"β = {T.format(beta)}"
        rep.say(f"coset {cover.coset_label(i)} ({label})")
        finite = all(s.finite for s in (tower.sub, tower.top, tower.bar))
        if finite:
            rep.say("  " + " → ".join(chain_strings(tower)))
        else:
            rep.say(f"  R[φ̄,ψ̄]: {len(tower.bar.classes)} classes; lift and base sets infinite")
        cb = tower.coin_bar
        rep.say(f"  coin(τφ,ψ) = {_coin_text(coin_subgroup(tower.phi_b, psi), gamma1)};  coin(φ̄,ψ̄) = {cb.describe()}")
        if finite:
            _tower_checks(rep, tower, label)
        else:
            rep.say("  sequence checks skipped: they need finite Reidemeister sets")
    return rep


def cmd_trace(b, args) -> Report:
    rep = Report("trace", b.name)
    if not isinstance(b, GeometricBundle):
        raise ModeError("trace needs a geometric bundle")
    f, g = b.f, b.g
    rt = reidemeister_trace(f, g)
    L, N = rt.augmentation, rt.support_size
    pts = oracle_coincidences(f, g)
    rep.say(f"bundle {b.name}")
    rep.say(f"RT = {rt.format()}")
    rep.say(f"L = {L}")
    rep.say(f"N = {N}")
    rep.say("coincidence points found by enumeration:")
    for p in pts:
        rep.say("  " + p.describe(f.target))
    try:
        ok = oracle_agrees(f, g)
        rep.check("class solver agrees with enumeration", ok)
    except IdentityFailure as exc:
        rep.check("class solver agrees with enumeration", False, str(exc))
    rep.data.update({"rt": rt.to_json(), "lefschetz": L, "nielsen": N, "points": [p.describe(f.target) for p in pts]})
    return rep


def _sabotaged(table: dict, divisor: int, rset) -> dict:
    out = {i: dict(t) for i, t in table.items()}
    first = min(out) if out else 0
    t = out.setdefault(first, {})
    key = next(iter(t), None)
    if key is None:
        key = rset.target.identity
    t[key] = t.get(key, 0) + divisor
    return out


def cmd_verify_averaging(b, args) -> Report:
    rep = Report("verify-averaging", b.name)
    if isinstance(b, GeometricBundle):
        _verify_geometric(rep, b, args)
    else:
        _verify_algebraic(rep, b, args)
    return rep


def _verify_geometric(rep: Report, b: GeometricBundle, args) -> None:
    f, g = b.f, b.g
    cover = geometric_cover(f, g, b.L1, b.L2)
    rep.say(f"bundle {b.name}: coincidence trace averaging over a cover of index {cover.index1}")
    tr = average_rt_coincidence(f, g, cover, sabotage=args.sabotage)
    rep.say(tr.table())
    if not tr.equal:
        rep.say(f"  difference rhs - lhs = {(tr.rhs + tr.lhs.scale(-1)).format()}")
    rep.check("coincidence trace averaging", tr.equal)
    if b.fixed:
        fx = average_rt_fixed(f, b.L1)
        rep.check("fixed-point trace averaging", fx.equal)
        rep.check("fixed-point report matches the coincidence report", not args.sabotage and fx.rhs == tr.rhs)
    la = average_lefschetz(f, g, cover, tr)
    rep.say(f"Lefschetz: L = {la.lhs}; per lift " + ", ".join(f"{c}: {v}" for c, v in la.per_lift) + f"; average {la.rhs}")
    rep.check("Lefschetz averaging", la.equal)
    rep.check("augmentation of averaged trace equals L", la.matches_trace_report)
    rep.data["trace_averaging"] = tr.to_json()
    rep.data["lefschetz_averaging"] = la.to_json()
    if b.region is not None:
        loc = average_rt_coincidence(f, g, cover, region=b.region)
        rep.say("local trace on the region:")
        rep.say(loc.table())
        rep.check("local trace averaging", loc.equal)
        rep.data["local_trace_averaging"] = loc.to_json()
        if b.fixed:
            ia = average_index(f, b.region, b.L1)
            rep.say(f"local index {ia.lhs}; per lift " + ", ".join(f"{c}: {v}" for c, v in ia.per_lift) + f"; average {ia.rhs}")
            rep.check("local index averaging", ia.equal)
            rep.data["index_averaging"] = ia.to_json()


def _verify_algebraic(rep: Report, case: AlgebraicCase, args) -> None:
    sweep = parse_sweep(args.sweep) if args.sweep else (list(range(-3, 4)) if case.symbolic else [0])
    b = case.bundle
    rep.say(f"bundle {case.name}: algebraic mode, k in {sweep[0]}..{sweep[-1]}" if case.symbolic else f"bundle {case.name}: algebraic mode")
    base = twisted_classes(b.phi, b.psi)
    cover = validate_cover(b.phi, b.psi, b.gamma1, b.gamma2)
    runs = []
    for k in sweep:
        tables = case.lift_tables(k)
        if args.sabotage:
            tables = _sabotaged(tables, cover.index1, base)
        lhs = case.lhs_table(k) if case.lhs_table else None
        ar = algebraic_mode_verify(b, tables, lhs).report
        label = f"k = {k}" if case.symbolic else "supplied indices"
        rep.say(label)
        rep.say("\n".join("  " + s for s in ar.table().splitlines()))
        if ar.equal is None:
            rep.say("  no left-hand table supplied; rhs only")
        else:
            if not ar.equal:
                rep.say(f"  difference rhs - lhs = {(ar.rhs + ar.lhs.scale(-1)).format()}")
            rep.check(f"averaging identity at {label}", ar.equal)
        runs.append({"k": k, **ar.to_json()})
    rep.data["runs"] = runs


def cmd_selftest(args) -> Report:
    rep = Report("selftest", "acceptance suite")
    for code, fn in CRITERIA.items():
        r = fn()
        rep.lines.append(r.line())
        rep.checks.append(r.to_json() | {"check": code})
    return rep


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coinrt", description="Exact Reidemeister traces and averaging formulas on flat manifolds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--example", choices=example_names(), help="built-in bundle")
        sp.add_argument("--bundle", help="JSON bundle file")
        sp.add_argument("--mode", choices=("geometric", "algebraic"), help="require this bundle mode")
        sp.add_argument("--json", action="store_true", help="machine-readable report")

    common(sub.add_parser("reidemeister", help="Reidemeister sets, coincidence subgroups and counting identities"))
    common(sub.add_parser("trace", help="Reidemeister trace, L and N with an enumeration cross-check"))
    va = sub.add_parser("verify-averaging", help="both sides of the averaging identities")
    common(va)
    va.add_argument("--sweep", help="values of k for symbolic index tables, e.g. -3..3")
    va.add_argument("--sabotage", action="store_true", help="test hook: corrupt one coefficient; the run must fail")
    st = sub.add_parser("selftest", help="run the acceptance suite")
    st.add_argument("--json", action="store_true", help="machine-readable report")
    return p


COMMANDS = {"reidemeister": cmd_reidemeister, "trace": cmd_trace, "verify-averaging": cmd_verify_averaging}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            rep = cmd_selftest(args)
        else:
            rep = COMMANDS[args.command](_load(args), args)
    except INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"coinrt: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except IdentityFailure as exc:
        print(f"coinrt: identity failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.json:
        print(json.dumps(rep.to_json(), indent=2, ensure_ascii=False))
    else:
        print("\n".join(rep.lines))
        print("PASS" if rep.passed else "FAIL")
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
