"""The `iet` command line: renormalization experiments as files.

Subcommands: rauzy, induct, lyapunov, roth, boundary, cohomology,
invariant, suspend, appendixc, linearize, fixture. Outputs are JSON or
CSV with all numbers rendered as decimal strings (rationals as "p/q"),
so fixed inputs reproduce byte-identical files.

Exit codes: 0 success; 1 malformed input or usage; 2 domain errors
(connections, failed preconditions); 3 precision exhaustion.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import fixtures as registry
from .combinatorics import (
    PermutationPair,
    build_rauzy_class,
    genus_and_marked_points,
)
from .errors import IetError, InputFormatError, PrecisionExhausted
from .iem import BRANCH_FAMILIES, GeneralizedIEM, StandardIEM
from .induction import cocycle_norm, iterate_rv, zorich_accelerate
from .numeric import decimal_str, default_bits


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputFormatError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputFormatError(
            f"malformed JSON in {path} at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}")


def load_iem(spec: str, bits: int | None = None) -> StandardIEM:
    if spec.startswith("fixture:"):
        return registry.load_fixture_iem(spec.split(":", 1)[1], bits)
    obj = load_json(spec)
    try:
        return StandardIEM.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"bad i.e.m. JSON in {spec}: {exc}")


def load_giem(spec: str) -> GeneralizedIEM:
    obj = load_json(spec)
    try:
        base = StandardIEM.from_json(obj["base"])
        branches = {}
        with base.mode.workprec():
            for a in base.pi.alphabet:
                binfo = dict(obj["branches"][a])
                kind = binfo.pop("kind")
                family = BRANCH_FAMILIES[kind]
                p = base.pi.position_top(a)
                q = base.pi.position_bottom(a)
                args = dict(
                    left=base.top_points[p - 1], right=base.top_points[p],
                    image_left=base.bottom_points[q - 1],
                    image_right=base.bottom_points[q])
                if kind == "translation":
                    args = dict(left=args["left"], right=args["right"],
                                delta=base.translations[a])
                elif kind == "affine":
                    args.pop("image_right")
                    args["slope"] = base.mode.coerce(binfo.pop("slope"))
                for key, val in binfo.items():
                    args[key] = base.mode.coerce(val) \
                        if key in ("eps", "c") else val
                branches[a] = family(**args)
            return GeneralizedIEM(base.pi, base.top_points,
                                  base.bottom_points, branches, base.mode,
                                  order=int(obj.get("order", 6)))
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"bad generalized i.e.m. JSON in {spec}: {exc}")


def write_json(path: str | None, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def render_figures(figdir: str, csv_path: str, specs: list[dict]) -> None:
    """Report-path figures next to the delimited output (needs ietplot)."""
    try:
        from ietplot import FigureSpec, render
    except ImportError:
        raise InputFormatError(
            "--figures needs the separable ietplot package "
            "(pip install ./plots)")
    import os
    os.makedirs(figdir, exist_ok=True)
    for spec in specs:
        spec = dict(spec, input=csv_path,
                    out=os.path.join(figdir, spec["out"]))
        render(FigureSpec.from_dict(spec))


def write_csv(path: str | None, header: list[str], rows: list[dict]) -> None:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.12g}"
        if isinstance(v, (int, str)):
            return v
        return decimal_str(v)

    out = sys.stdout if path is None else open(path, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(row[h]) for h in header])
    finally:
        if path is not None:
            out.close()


# ---------------------------------------------------------------------------
# Subcommands


def cmd_rauzy(args) -> int:
    if args.seed_pi.startswith("fixture:"):
        pi = registry.load_fixture_iem(args.seed_pi.split(":", 1)[1]).pi
    else:
        pi = PermutationPair.from_json(load_json(args.seed_pi))
    diagram = build_rauzy_class(pi, max_vertices=args.max_vertices)
    g, s = genus_and_marked_points(pi)
    nv, na = len(diagram.vertices), len(diagram.arrows)
    print(f"{nv} {'vertex' if nv == 1 else 'vertices'}, {na} arrows "
          f"(genus {g}, marked points {s})")
    if args.out:
        write_json(args.out, diagram.to_json())
    return 0


def cmd_induct(args) -> int:
    iem = load_iem(args.iem, args.bits)
    trace = iterate_rv(iem, args.steps)
    rows = []
    with iem.mode.workprec():
        for n, arrow in enumerate(trace.arrows, start=1):
            level = trace.iem(n)
            rows.append({
                "level": n,
                "arrow": arrow.kind,
                "winner": arrow.winner,
                "loser": arrow.loser,
                "lengths": {a: decimal_str(v)
                            for a, v in level.lengths.items()},
                "min_gap": decimal_str(trace.min_interval_length(n)),
            })
    out = {"levels": rows}
    if args.zorich:
        groups = zorich_accelerate(trace.arrows)
        out["zorich"] = [{"winner": g.winner, "size": g.size}
                         for g in groups]
    write_json(args.out, out)
    return 0


def cmd_lyapunov(args) -> int:
    from .cocycle import lyapunov_and_stable_space
    iem = load_iem(args.iem, args.bits)
    g, s = genus_and_marked_points(iem.pi)
    trace = iterate_rv(iem, args.depth)
    split = lyapunov_and_stable_space(trace.arrows, genus=g,
                                      tau_min=args.tau_min)
    d = iem.pi.d
    rows = []
    for stop, sums, logb in split.history:
        ordered = sorted(sums, reverse=True)
        row = {"step": stop, "residual": float(abs(sums.sum()))}
        for i in range(d):
            row[f"exponent_{i+1}"] = ordered[i] / logb if logb > 0 else 0.0
        rows.append(row)
    header = ["step"] + [f"exponent_{i+1}" for i in range(d)] + ["residual"]
    write_csv(args.out, header, rows)
    print(f"stable_dim={split.stable_dim} genus={g} "
          f"restricted={split.restricted}")
    return 0


def cmd_roth(args) -> int:
    from .cocycle import (
        factor_minimal_complete,
        lyapunov_and_stable_space,
        roth_condition_a,
        roth_condition_b,
        roth_condition_c,
        stable_frames_per_factor,
        positivity_window_check,
    )
    iem = load_iem(args.iem, args.bits)
    g, s = genus_and_marked_points(iem.pi)
    try:
        trace = iterate_rv(iem, args.depth)
        arrows = trace.arrows
    except IetError as exc:
        raise
    factors = factor_minimal_complete(arrows)
    if len(factors) < 3:
        raise InputFormatError("need at least 3 complete factors; "
                               "increase --depth")
    rep_a = roth_condition_a(factors)
    lengths = [iem.lengths[a] for a in iem.pi.alphabet]
    rep_b = roth_condition_b(factors, lengths)
    split = lyapunov_and_stable_space(arrows, genus=g, tau_min=args.tau_min)
    rep_c = None
    if split.stable_dim:
        frames = stable_frames_per_factor(factors)
        rep_c = roth_condition_c(factors, split.stable_dim, frames)
    pos = positivity_window_check(factors, iem.pi.d)
    rows = []
    for i, f in enumerate(factors[:-1]):
        n = i + 1
        row = {
            "n": n,
            "norm_Z": factors[i + 1].norm_z,
            "norm_B": f.norm_b,
            "ratio_a": rep_a.ratios[i] if i < len(rep_a.ratios) else "",
            "theta_hat": rep_b.theta_series[i],
            "stable_dim": split.stable_dim,
            "sigma_c_restrict": rep_c.restrict_ratios[i - 1]
            if rep_c and 0 < i <= len(rep_c.restrict_ratios) else "",
            "sigma_c_quotient": rep_c.quotient_ratios[i - 1]
            if rep_c and 0 < i <= len(rep_c.quotient_ratios) else "",
        }
        rows.append(row)
    write_csv(args.out, ["n", "norm_Z", "norm_B", "ratio_a", "theta_hat",
                         "stable_dim", "sigma_c_restrict",
                         "sigma_c_quotient"], rows)
    if args.figures:
        if not args.out:
            raise InputFormatError("--figures needs --out")
        render_figures(args.figures, args.out, [
            {"kind": "series", "x": "n", "y": ["ratio_a"],
             "out": "ratio_a.svg", "title": "condition (a) ratio"},
            {"kind": "series", "x": "n", "y": ["theta_hat"],
             "out": "theta_hat.svg", "title": "condition (b) exponent"},
        ])
    print(f"condition_a={rep_a.verdict} theta_tail={rep_b.theta_tail:.6g} "
          f"stable_dim={split.stable_dim} restricted={split.restricted} "
          f"positivity={pos.status}")
    return 0


def cmd_boundary(args) -> int:
    from .functions import piecewise_function
    iem = load_iem(args.iem, args.bits)
    phi = piecewise_function(iem, load_json(args.phi))
    bv = phi.boundary()
    write_json(args.out, {
        "components": [decimal_str(v) for v in bv.values],
        "cycles": [[list(hp) for hp in cyc] for cyc in bv.sigma.cycles],
        "total": decimal_str(bv.total()),
    })
    return 0


def cmd_cohomology(args) -> int:
    from .cocycle import lyapunov_and_stable_space
    from .cohomology import (nu_invariant, solve_cohomological,
                             solve_cohomological_higher)
    from .functions import piecewise_function
    from .errors import DomainError
    iem = load_iem(args.iem, args.bits)
    g, s = genus_and_marked_points(iem.pi)
    trace = iterate_rv(iem, args.depth)
    split = lyapunov_and_stable_space(trace.arrows, genus=g)
    phi = piecewise_function(iem, load_json(args.phi))
    if args.order == 1:
        sol = solve_cohomological(trace, split, phi,
                                  grid_points=args.grid)
        nu = None
        if max(abs(float(v)) for v in sol.chi.values()) < 1e-5 and \
                max(abs(float(v))
                    for v in phi.boundary_values.values()) < 1e-8:
            try:
                nu = nu_invariant(sol, iem)
            except DomainError:
                nu = None
        write_json(args.out, {
            "chi": {a: decimal_str(v) for a, v in sol.chi.items()},
            "psi_grid": [decimal_str(v) for v in sol.psi_grid],
            "grid": [decimal_str(v) for v in sol.grid],
            "residual_sup": sol.residual_sup,
            "deep_sup": sol.deep_sup,
            "levels_used": sol.levels_used,
            "converged": sol.converged,
            "nu": nu,
        })
    else:
        hs = solve_cohomological_higher(trace, split, phi, r=args.order,
                                        grid_points=args.grid)
        write_json(args.out, {
            "order": hs.order,
            "chi_coeffs": {a: [decimal_str(c) for c in cs]
                           for a, cs in hs.chi_poly.coeffs.items()},
            "pi_distance": hs.pi_distance,
            "residuals": hs.residuals,
            "fit_error": hs.fit_error,
        })
    return 0


def cmd_invariant(args) -> int:
    from .jets import invariant
    giem = load_giem(args.giem)
    fam = invariant(giem, args.order)
    cycles_out = []
    for form, cyc in zip(fam.forms, fam.cycles):
        entry = {"cycle": [list(hp) for hp in cyc], "kind": form.kind}
        if form.kind == "linear":
            entry["linear"] = decimal_str(form.linear)
        elif form.kind == "parabolic":
            entry.update(contact=form.contact, sign=form.sign,
                         residue=decimal_str(form.residue)
                         if form.residue is not None else None)
        cycles_out.append(entry)
    write_json(args.out, {"trivial": fam.trivial, "cycles": cycles_out})
    return 0


def cmd_suspend(args) -> int:
    from .suspension import suspend
    iem = load_iem(args.iem, args.bits)
    surf = suspend(iem)
    write_json(args.out, surf.to_json())
    return 0


def cmd_appendixc(args) -> int:
    from .suspension import appendix_c_diagnostics
    iem = load_iem(args.iem, args.bits)
    trace = iterate_rv(iem, args.depth) if args.depth else None
    diag = appendix_c_diagnostics(iem, n_orbit=args.N, trace=trace)
    write_csv(args.out, ["N_or_n", "separation", "covering",
                         "entrance_ratio", "balance_ratio"], diag.rows())
    if args.figures:
        if not args.out:
            raise InputFormatError("--figures needs --out")
        render_figures(args.figures, args.out, [
            {"kind": "loglog-fit", "x": "N_or_n", "y": ["separation"],
             "out": "separation.svg", "title": "orbit separation"},
            {"kind": "loglog-fit", "x": "N_or_n", "y": ["covering"],
             "out": "covering.svg", "title": "covering radius"},
        ])
    print(f"separation_slope={diag.separation_slope:.4f} "
          f"covering_slope={diag.covering_slope:.4f}")
    return 0


def cmd_linearize(args) -> int:
    if args.target == "circle":
        from .linearizer import linearize_circle
        omega = _parse_omega(args.omega)
        eps = float(args.eps)
        res = linearize_circle(
            lambda x: x + omega + eps * math.sin(2 * math.pi * x),
            omega, G=args.grid)
        rows = [{"iter": i + 1, "increment": inc, "residual": r}
                for i, (inc, r) in enumerate(zip(res.increments,
                                                 res.residuals))]
        write_csv(args.out, ["iter", "increment", "residual"], rows)
        if args.figures:
            if not args.out:
                raise InputFormatError("--figures needs --out")
            render_figures(args.figures, args.out, [
                {"kind": "residual", "x": "iter", "y": ["residual"],
                 "out": "linearizer_residual.svg",
                 "title": "conjugacy residual"}])
        print(f"converged={res.converged} t={res.t:.9g} "
              f"residual_sup={res.residual_sup:.3e}")
        return 0
    # experimental i.e.m. lane
    from .cocycle import lyapunov_and_stable_space
    from .linearizer import (deformed_iem, iem_glue_residuals,
                             IdentityBranch)
    from .functions import piecewise_function
    iem = load_iem(args.fixture, args.bits)
    g, s = genus_and_marked_points(iem.pi)
    trace = iterate_rv(iem, args.depth)
    split = lyapunov_and_stable_space(trace.arrows, genus=g)
    dphi = piecewise_function(iem, load_json(args.phi)) if args.phi else \
        piecewise_function(iem, {"kind": "plateau_cycles",
                                 "values": [0.0] * s,
                                 "extras": [(0.3, 0.05)]})
    T_t = deformed_iem(iem, dphi, float(args.eps))
    res = iem_glue_residuals(T_t, IdentityBranch(float(iem.total)),
                             trace, split)
    write_json(args.out, {
        "case": res.case,
        "counts": res.counts,
        "eq61": [float(v) for v in res.eq61],
        "eq62": [float(v) for v in res.eq62],
        "eq63": [float(v) for v in res.eq63],
        "eq64": [float(v) for v in res.eq64],
        "sup": res.sup(),
    })
    return 0


def _parse_omega(text: str) -> float:
    if text == "golden":
        return (math.sqrt(5) - 1) / 2
    if "/" in text:
        frac = Fraction(text)
        return frac.numerator / frac.denominator
    return float(text)


def cmd_fixture(args) -> int:
    iem = registry.load_fixture_iem(args.name, args.bits)
    write_json(args.out, iem.to_json())
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="iet", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed for any randomized sweep (determinism)")
    common.add_argument("--figures", default=None, metavar="DIR",
                        help="also render standard figures of the CSV into "
                             "DIR (needs the ietplot package)")

    def add(name, fn, **kwargs):
        sp = sub.add_parser(name, parents=[common], **kwargs)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("rauzy", cmd_rauzy, help="Rauzy class closure from a seed")
    sp.add_argument("--seed-pi", required=True,
                    help="permutation JSON path or fixture:NAME")
    sp.add_argument("--max-vertices", type=int, default=10**5)
    sp.add_argument("--out")

    sp = add("induct", cmd_induct, help="Rauzy-Veech induction trace")
    sp.add_argument("--iem", required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--zorich", action="store_true")
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("lyapunov", cmd_lyapunov, help="KZ-cocycle Lyapunov estimates")
    sp.add_argument("--iem", required=True)
    sp.add_argument("--depth", type=int, default=400)
    sp.add_argument("--tau-min", type=float, default=0.05)
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("roth", cmd_roth, help="Roth-type diagnostics CSV")
    sp.add_argument("--iem", required=True)
    sp.add_argument("--depth", type=int, default=300)
    sp.add_argument("--tau-min", type=float, default=0.05)
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("boundary", cmd_boundary, help="boundary operator of a function")
    sp.add_argument("--iem", required=True)
    sp.add_argument("--phi", required=True, help="function spec JSON")
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("cohomology", cmd_cohomology,
             help="solve phi = chi + psi o T - psi")
    sp.add_argument("action", choices=["solve"])
    sp.add_argument("--iem", required=True)
    sp.add_argument("--phi", required=True)
    sp.add_argument("--depth", type=int, default=300)
    sp.add_argument("--order", type=int, default=1)
    sp.add_argument("--grid", type=int, default=2000)
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("invariant", cmd_invariant, help="jet conjugacy invariant")
    sp.add_argument("--giem", required=True,
                    help="generalized i.e.m. JSON (base + branch families)")
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--out")

    sp = add("suspend", cmd_suspend, help="canonical suspension surface")
    sp.add_argument("--iem", required=True)
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("appendixc", cmd_appendixc, help="separation/covering/entrance "
             "diagnostics")
    sp.add_argument("--iem", required=True)
    sp.add_argument("--N", type=int, default=20000)
    sp.add_argument("--depth", type=int, default=160)
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("linearize", cmd_linearize, help="Herman-scheme linearizers")
    sp.add_argument("target", choices=["circle", "iem"])
    sp.add_argument("--omega", default="golden")
    sp.add_argument("--eps", default="0.01")
    sp.add_argument("--grid", type=int, default=1024)
    sp.add_argument("--fixture", help="i.e.m. for the experimental lane")
    sp.add_argument("--phi", help="deformation direction spec JSON")
    sp.add_argument("--depth", type=int, default=288)
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")

    sp = add("fixture", cmd_fixture, help="materialize a registry fixture")
    sp.add_argument("name", choices=registry.fixture_names())
    sp.add_argument("--bits", type=int)
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if args.seed is not None:
        import random
        random.seed(args.seed)
        np.random.seed(args.seed % 2**32)
    try:
        return args.fn(args)
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return 3
    except InputFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except IetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
