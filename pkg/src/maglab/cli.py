"""Experiment drivers: one subcommand per study, flat key=value configs,
CSV/JSON emission, and exit codes that encode the embedded property checks
(0 pass, 1 check failure, 2 bad configuration).

Subcommands: averaging, eig, bulk-table, gl, field-gen.  Config values are
read from --config (lines "key = value", "#" comments) and overridden by
trailing "key=value" arguments; --seed, --h and --out override the matching
keys.  Every emitted report carries the seed, resolution, tolerances and
package version so runs are reproducible bit for bit.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .fields import Cell, Domain, ScalarField
from .io import write_scalar_csv
from .lattice import build_lattice
from .potentials import (averaging_gap_both, cell_average,
                         ess_inf, potential_from_field)
from .randfield import RandomFourierField


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------

def load_config(path):
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            cfg[key.strip()] = val.strip()
    return cfg


def apply_overrides(cfg, pairs):
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, val = pair.split("=", 1)
        cfg[key.strip()] = val.strip()
    return cfg


def cfg_float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: {cfg[key]!r} is not a number")


def cfg_int(cfg, key, default=None):
    val = cfg_float(cfg, key, default)
    if val != int(val):
        raise ConfigError(f"key {key!r} must be an integer")
    return int(val)


def cfg_floats(cfg, key, default):
    raw = cfg.get(key)
    if raw is None:
        return list(default)
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"key {key!r}: {raw!r} is not a number list")


def parse_domain(cfg, default="square:1"):
    """Domain spec "square:side", "disk:radius" or
    "annulus:R:hx:hy:hr[:...]", with grid spacing from key "h"."""
    spec = cfg.get("domain", default)
    h = cfg_float(cfg, "h")
    parts = spec.split(":")
    try:
        if parts[0] == "square":
            return Domain.square(float(parts[1]), h=h)
        if parts[0] == "disk":
            return Domain.disk((0.0, 0.0), float(parts[1]), h=h)
        if parts[0] == "annulus":
            radius = float(parts[1])
            rest = [float(t) for t in parts[2:]]
            holes = [tuple(rest[i:i + 3]) for i in range(0, len(rest), 3)]
            return Domain.annulus((0.0, 0.0), radius, holes, h=h)
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad domain spec {spec!r}: {exc}")
    raise ConfigError(f"unknown domain kind {parts[0]!r}")


def parse_field(cfg, domain, lower=None):
    """Field spec "constant:c" or "fourier:seed[:kmax[:eps]]"; a fourier
    field is shifted above `lower` (or key "field_floor") when given."""
    spec = cfg.get("field", "constant:1")
    parts = spec.split(":")
    try:
        if parts[0] == "constant":
            c = float(parts[1]) if len(parts) > 1 else 1.0
            return ScalarField.constant(domain, c), {"field": spec}
        if parts[0] == "fourier":
            seed = int(parts[1])
            kmax = int(parts[2]) if len(parts) > 2 else 32
            eps = float(parts[3]) if len(parts) > 3 else 0.1
            rf = RandomFourierField(seed, kmax=kmax, eps=eps)
            floor = cfg_float(cfg, "field_floor", -1.0) \
                if lower is None else lower
            if floor >= 0.0:
                rf = rf.with_lower_bound(domain, floor)
            return rf.sample(domain), {"field": spec, "field_floor": floor}
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad field spec {spec!r}: {exc}")
    raise ConfigError(f"unknown field kind {parts[0]!r}")


def _pool_map(fn, items, jobs):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- subcommands ---------------------------------------------------------

def cmd_averaging(cfg, jobs=1):
    """Cell-averaging inequality sweep over seeded random fields."""
    n_fields = cfg_int(cfg, "n_fields", 100)
    seed0 = cfg_int(cfg, "seed", 0)
    ells = cfg_floats(cfg, "ells", (0.25, 0.125, 0.0625))
    divisions = cfg_int(cfg, "divisions", 128)
    kmax = cfg_int(cfg, "kmax", 32)
    eps = cfg_float(cfg, "eps", 0.1)
    quad_n = cfg_int(cfg, "quad_n", 64)
    quad_rtol = cfg_float(cfg, "quad_rtol", 3e-5)

    instances = [(seed0 + i, ell) for i in range(n_fields) for ell in ells]

    def run(inst):
        seed, ell = inst
        h = ell / divisions
        dom = Domain.square(ell, h=h, origin=(-ell / 2, -ell / 2))
        B = RandomFourierField(seed, kmax=kmax, eps=eps).sample(dom)
        cell = Cell(center=(0.0, 0.0), size=ell)
        lhs, rhs, rhs_s = averaging_gap_both(B, cell, n=quad_n,
                                             rtol=quad_rtol)
        lhs_s = lhs
        tol = 10.0 * h
        ratio = lhs / rhs if rhs > 0 else 0.0
        return {"seed": seed, "ell": ell, "h": h, "lhs": lhs, "rhs": rhs,
                "ratio": ratio, "sharp_lhs": lhs_s, "sharp_rhs": rhs_s,
                "sharp_ratio": lhs_s / rhs_s if rhs_s > 0 else 0.0,
                "ok": bool(lhs <= rhs * (1.0 + tol)
                           and lhs_s <= rhs_s * (1.0 + tol))}

    rows = _pool_map(run, instances, jobs)
    checks = {"all_ratios_within_tol": all(r["ok"] for r in rows)}
    params = {"n_fields": n_fields, "seed": seed0, "ells": ells,
              "divisions": divisions, "kmax": kmax, "eps": eps,
              "quad_n": quad_n, "quad_rtol": quad_rtol}
    return {"rows": rows, "checks": checks, "params": params}


def cmd_eig(cfg, jobs=1):
    """Lowest magnetic eigenvalue sweep over field strengths sigma."""
    from .spectral import assemble, lowest_eigenvalue

    domain = parse_domain(cfg)
    B, field_params = parse_field(cfg, domain.outer())
    sigmas = cfg_floats(cfg, "sigmas", (100.0,))
    tol = cfg_float(cfg, "tol", 1e-7)
    lam_tol = cfg_float(cfg, "lam_tol", 1e-6)
    A = potential_from_field(B)

    rows = []
    for sigma in sigmas:
        op = assemble(domain, sigma, A)
        res = lowest_eigenvalue(op, tol=tol, lam_tol=lam_tol)
        rows.append({"sigma": sigma, "lam": res.lam,
                     "lam_over_sigma": res.lam / sigma if sigma else None,
                     "residual": res.residual,
                     "iterations": res.iterations})

    checks = {}
    if "expect_lam" in cfg:
        expect = cfg_float(cfg, "expect_lam")
        rtol = cfg_float(cfg, "expect_rtol", 5e-3)
        checks["expected_eigenvalue"] = all(
            abs(r["lam"] - expect) <= rtol * abs(expect) for r in rows)
    if cfg_int(cfg, "check_monotone", 0):
        ratios = [r["lam_over_sigma"] for r in rows if r["sigma"] > 0]
        checks["ratio_nonincreasing"] = all(
            b <= a * (1 + 1e-10) for a, b in zip(ratios, ratios[1:]))
    params = {"h": domain.h, "sigmas": sigmas, "tol": tol,
              "lam_tol": lam_tol, "domain": cfg.get("domain", "square:1")}
    params.update(field_params)
    return {"rows": rows, "checks": checks, "params": params}


def cmd_bulk_table(cfg, jobs=1):
    """Bulk energy table g(b) over a grid of reduced fields."""
    from .bulk import build_bulk_table

    b_grid = cfg_floats(cfg, "b_grid",
                        np.linspace(0.0, 1.0, 17).tolist())
    R_list = cfg_floats(cfg, "R_list", (4.0, 6.0, 8.0, 12.0, 16.0))
    if "R_div" in cfg:
        div = cfg_float(cfg, "R_div")
        h = lambda R: R / div  # per-R spacing: fixed node count per side
    else:
        h = cfg.get("R_h")
        h = float(h) if h is not None else None
    bracket_tol = cfg_float(cfg, "bracket_tol", 0.25)
    energy_tol = cfg_float(cfg, "energy_tol", 1e-9)

    table = build_bulk_table(b_grid=b_grid, R_list=R_list, h=h,
                             tol=bracket_tol, energy_tol=energy_tol)
    gs = list(table.g_nodes()[1])
    mono = all(b >= a - 1e-9 for a, b in zip(gs, gs[1:]))
    concave = all(gs[i + 1] >= 0.5 * (gs[i] + gs[i + 2]) - 1e-6
                  for i in range(len(gs) - 2))
    checks = {"g_monotone": mono, "g_concave": concave,
              "g_in_range": all(-0.5 - 1e-9 <= g <= 1e-12 for g in gs)}
    params = {"b_grid": b_grid, "R_list": R_list,
              "h": cfg.get("R_div", cfg.get("R_h", "default")),
              "bracket_tol": bracket_tol, "energy_tol": energy_tol}
    return {"rows": table.summaries, "records": table.records,
            "checks": checks, "params": params, "table": table}


def _snap_ell(ell, h, kmin=4):
    k = max(kmin, int(round(ell / h)))
    return k * h


def cmd_gl(cfg, jobs=1):
    """Ginzburg-Landau minimization against the homogenized energy."""
    from .bulk import g_interpolant
    from .gl import thm13_report

    domain = parse_domain(cfg)
    B, field_params = parse_field(cfg, domain.outer(), lower=0.1)
    kappas = cfg_floats(cfg, "kappas", (8.0,))
    b = cfg_float(cfg, "b", 0.5)
    tol = cfg_float(cfg, "tol", 1e-5)
    gap_growth = cfg_float(cfg, "gap_growth", 1.5)
    if "g_table" in cfg:
        with open(cfg["g_table"]) as fh:
            summaries = json.load(fh)
        g = g_interpolant([s["b"] for s in summaries],
                          [s["g_est"] for s in summaries])
    else:
        g = g_interpolant([], [])

    rows = []
    for kappa in kappas:
        ell = cfg_float(cfg, "ell", kappa ** -0.75)
        ell = _snap_ell(ell, domain.h)
        rec = thm13_report(B, kappa, b, ell, g, domain=domain, tol=tol)
        rows.append({key: rec[key] for key in
                     ("kappa", "H", "b", "ell", "E_min", "E_trial", "E_asy",
                      "gap", "normalized_gap", "psi_linf")}
                    | {"el_residuals": list(rec["info"]["el_residuals"]),
                       "converged": rec["info"]["converged"]})

    gaps = [r["normalized_gap"] for r in rows]
    checks = {"E_min_le_E_trial": all(r["E_min"] <= r["E_trial"] + 1e-9
                                      for r in rows),
              "E_trial_le_zero": all(r["E_trial"] <= 1e-9 for r in rows),
              "converged": all(r["converged"] for r in rows)}
    if len(gaps) >= 2:
        checks["gap_no_growth"] = gaps[-1] <= gap_growth * gaps[0] + 1e-12
    params = {"h": domain.h, "kappas": kappas, "b": b, "tol": tol,
              "domain": cfg.get("domain", "square:1")}
    params.update(field_params)
    return {"rows": rows, "checks": checks, "params": params}


def cmd_field_gen(cfg, jobs=1):
    """Sample a seeded random field to CSV for downstream runs."""
    domain = parse_domain(cfg)
    seed = cfg_int(cfg, "seed", 0)
    cfg = dict(cfg)
    cfg.setdefault("field", f"fourier:{seed}")
    B, field_params = parse_field(cfg, domain)
    floor = cfg_float(cfg, "field_floor", -1.0)
    vmin = float(B.values.min())
    checks = {}
    if floor >= 0.0:
        checks["above_floor"] = vmin >= floor
    out_csv = cfg.get("csv")
    if out_csv:
        write_scalar_csv(out_csv, B)
    ell = cfg_float(cfg, "ell", 0.0)
    rows = [{"seed": seed, "min": vmin, "max": float(B.values.max()),
             "mean": float(B.values.mean()),
             "ess_inf": ess_inf(B, domain)}]
    if ell > 0.0:
        lat = build_lattice(domain, ell)
        rows[0]["cell_averages"] = [cell_average(B, c) for c in lat.cells()]
    params = {"h": domain.h, "seed": seed,
              "domain": cfg.get("domain", "square:1"), "csv": out_csv}
    params.update(field_params)
    return {"rows": rows, "checks": checks, "params": params}


# -- driver ----------------------------------------------------------------

_COMMANDS = {
    "averaging": cmd_averaging,
    "eig": cmd_eig,
    "bulk-table": cmd_bulk_table,
    "gl": cmd_gl,
    "field-gen": cmd_field_gen,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maglab",
        description="magnetic averaging / spectra / Ginzburg-Landau runs")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("overrides", nargs="*",
                        help="key=value config overrides")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="override the seed key")
    parser.add_argument("--h", type=float, help="override the h key")
    parser.add_argument("--out", help="write the JSON report here")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker threads for independent instances")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        apply_overrides(cfg, args.overrides)
        if args.seed is not None:
            cfg["seed"] = str(args.seed)
        if args.h is not None:
            cfg["h"] = str(args.h)
        report = _COMMANDS[args.command](cfg, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    table = report.pop("table", None)
    report = {"command": args.command, "version": __version__} | report
    report["pass"] = all(report["checks"].values())
    text = json.dumps(report, indent=1, default=float)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        if table is not None:
            table.to_csv(args.out + ".records.csv")
    else:
        print(text)
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
