"""Batch command-line front end.

Commands: ode, map, energy, hopf, verify, minimize, export.
Each command reads a flat key=value config file (`--config`), overridable
by the flags --grid/--seed/--out; unknown keys are rejected before any
computation starts. Outputs are deterministic: identical config + seed
give byte-identical CSV/JSON.

Exit codes: 0 success / all verdicts hold; 1 usage or config error;
2 data or degeneracy error; 3 verdict failure.
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import serialize
from .energy import cov_gap, energy_direct, energy_inverse
from .errors import DataError, DegeneracyError, QcError, UsageError, ConfigurationError
from .fields import MappingField, wirtinger_derivatives, distortion
from .grids import build_grid
from .hopf import dbar_residual, holomorphy_threshold, hopf_differential, l1_mass, mobius_invariance_gap
from .maps import as_field, bump_basis, parse_map, random_boundary_identity_map, squeeze_map
from .minimizer import MinimizeOptions, minimize
from .ode import build_half_plane_map, solve_profile, surjectivity_diagnosis
from .profiles import parse_profile
from .reich_strebel import energy_gap, pointwise_teich, rs_sides
from .weights import parse_weight

_COMMAND_KEYS = {
    "ode": {"profile", "grid", "seed", "out"},
    "map": {"map", "domain", "grid", "seed", "out", "format"},
    "energy": {"map", "domain", "grid", "psi", "weight", "form", "seed", "out"},
    "hopf": {"map", "domain", "grid", "psi", "weight", "levels", "seed", "out"},
    "verify": {"battery", "grid", "n_maps", "psi", "weight", "map", "seed", "out"},
    "minimize": {"grid", "psi", "weight", "start", "grad_tol", "j_floor",
                 "max_iter", "basis_levels", "seed", "out"},
    "export": {"what", "spec", "domain", "grid", "format", "seed", "out"},
}

_DOMAIN_EXTENTS = {
    "disk": None,
    "half-plane": (20.0, 1e-3, 20.0),
    "rectangle": (0.0, 1.0, 0.0, 1.0),
}


@dataclass
class RunConfig:
    command: str
    values: dict

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise UsageError(f"command {self.command!r} needs config key {key!r}")
        return self.values[key]


def parse_config_file(path):
    out = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{ln}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(command, args):
    values = {}
    if args.config:
        values.update(parse_config_file(args.config))
    if args.grid is not None:
        values["grid"] = str(args.grid)
    if args.seed is not None:
        values["seed"] = str(args.seed)
    values["out"] = args.out
    unknown = set(values) - _COMMAND_KEYS[command]
    if unknown:
        raise UsageError(f"unknown config keys for {command!r}: {sorted(unknown)}")
    return RunConfig(command, values)


def _grid_for(cfg, default_n=128, default_domain="disk"):
    n = int(cfg.get("grid", default_n))
    domain = cfg.get("domain", default_domain)
    if domain not in _DOMAIN_EXTENTS:
        raise UsageError(f"unknown domain {domain!r}")
    return build_grid(domain, n, _DOMAIN_EXTENTS[domain])


def _outdir(cfg):
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_profile_spec(spec):
    parts = dict(p.split("=", 1) for p in spec.split(";") if p)
    required = {"psi", "eta", "lambda"}
    missing = required - set(parts)
    if missing:
        raise UsageError(f"profile spec missing {sorted(missing)}: {spec!r}")
    unknown = set(parts) - {"psi", "eta", "lambda", "ymax"}
    if unknown:
        raise UsageError(f"profile spec has unknown fields {sorted(unknown)}")
    psi = parse_profile(parts["psi"])
    eta = parse_weight(parts["eta"])
    lam = float(parts["lambda"])
    ymax = float(parts.get("ymax", 1100.0))
    return psi, eta, lam, ymax


def cmd_ode(cfg):
    psi, eta, lam, ymax = _parse_profile_spec(cfg.require("profile"))
    out = _outdir(cfg)
    profile = solve_profile(psi, eta, lam, ymax)
    ups = profile.ups
    K = (1 + ups ** 2) / (2 * ups)
    serialize.table_to_csv(out / "solution.csv", ["y", "u", "up", "K", "residual"],
                           [profile.ys, profile.us, ups, K, profile.residuals()])
    try:
        diag = surjectivity_diagnosis(profile)
        surj = diag.verdict
        ratio = diag.tail_ratio
    except DataError:
        surj, ratio = "undiagnosed (solve further)", float("nan")
    k_end = float(K[-1])
    k_mid = float(K[len(K) // 2])
    qc = "quasiconformal (discrete)" if k_end <= 1.01 * max(k_mid, 1.0) \
        else "not quasiconformal (K unbounded in truncation)"
    serialize.write_json_report({
        "branch": profile.branch,
        "M": profile.M,
        "complete": profile.complete,
        "no_solution": profile.no_solution,
        "overflow": profile.overflow,
        "surjectivity": surj,
        "tail_ratio": ratio,
        "quasiconformality": qc,
        "K_sup": float(np.max(K)),
        "u_end": float(profile.us[-1]),
        "y_end": profile.y_end,
    }, out / "verdict.json")
    return 0


def _field_for(cfg):
    grid = _grid_for(cfg)
    fn = parse_map(cfg.require("map"))
    return grid, as_field(fn, grid)


def cmd_map(cfg):
    grid, fld = _field_for(cfg)
    out = _outdir(cfg)
    fmt = cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown format {fmt!r}")
    if fmt == "csv":
        serialize.field_to_csv(grid, fld.values, out / "field.csv")
    else:
        serialize.field_to_json(grid, fld.values, out / "field.json")
    return 0


def cmd_energy(cfg):
    grid, fld = _field_for(cfg)
    psi = parse_profile(cfg.get("psi", "linear"))
    weight = parse_weight(cfg.get("weight", "unit"))
    form = cfg.get("form", "direct")
    if form not in ("direct", "inverse", "both"):
        raise UsageError(f"unknown energy form {form!r}")
    out = _outdir(cfg)
    doc = {"map": cfg.require("map"), "psi": psi.name, "weight": weight.kind,
           "grid": grid.n, "domain": grid.kind}
    if form in ("direct", "both"):
        e = energy_direct(fld, psi, weight)
        doc["direct"] = {"value": e.value, "degenerate_fraction": e.degenerate_fraction,
                         "excluded_area": e.excluded_area}
    if form in ("inverse", "both"):
        e = energy_inverse(fld, psi, weight)
        doc["inverse"] = {"value": e.value, "degenerate_fraction": e.degenerate_fraction,
                          "excluded_area": e.excluded_area}
    serialize.write_json_report(doc, _outdir(cfg) / "energy.json")
    return 0


def cmd_hopf(cfg):
    grid, fld = _field_for(cfg)
    psi = parse_profile(cfg.get("psi", "linear"))
    weight = parse_weight(cfg.get("weight", "unit"))
    out = _outdir(cfg)
    Phi = hopf_differential(fld, psi, weight)
    rep = dbar_residual(Phi)
    levels = [int(v) for v in cfg.get("levels", "64,128").split(",")]
    fn = parse_map(cfg.require("map"))
    fields = []
    for n in levels:
        gl = build_grid(grid.kind, n, _DOMAIN_EXTENTS[grid.kind])
        fields.append(hopf_differential(as_field(fn, gl), psi, weight))
    mass = l1_mass(fields)
    verdict = "holomorphic (discrete)" if rep.max_dbar <= holomorphy_threshold(Phi) \
        else "not holomorphic (discrete)"
    serialize.field_to_csv(grid, Phi.phi, out / "phi.csv", role="differential")
    serialize.write_json_report({
        "max_dbar": rep.max_dbar,
        "mean_value_gap": rep.mean_value_gap,
        "l1_levels": list(mass.masses),
        "l1_verdict": mass.verdict,
        "verdict": verdict,
    }, out / "hopf.json")
    return 0


def _battery_rs(cfg, rng, grid):
    phis = {"1": lambda w: np.ones(np.shape(w), dtype=complex),
            "w": lambda w: w,
            "w^2": lambda w: w ** 2,
            "1+w^3": lambda w: 1 + w ** 3}
    reports = []
    if cfg.get("map"):
        fields = [("explicit", as_field(parse_map(cfg.get("map")), grid))]
    else:
        n_maps = int(cfg.get("n_maps", 200))
        fields = [(f"random-{i}", as_field(random_boundary_identity_map(grid, rng), grid))
                  for i in range(n_maps)]
    for name, fld in fields:
        for pname, phi in phis.items():
            r = rs_sides(fld, phi)
            reports.append({"map": name, "phi": pname, "lhs": r.lhs, "rhs": r.rhs,
                            "slack": r.slack, "verdict": r.verdict,
                            "diagnostics": r.diagnostics})
    return reports


def _battery_pointwise(cfg, rng, grid):
    reports = []
    n_maps = int(cfg.get("n_maps", 20))
    phi = lambda w: np.ones(np.shape(w), dtype=complex)
    for i in range(n_maps):
        f = as_field(random_boundary_identity_map(grid, rng), grid)
        for gname, gf in (("id", MappingField.identity(grid)), ("same", f)):
            r = pointwise_teich(f, gf, phi)
            reports.append({"f": f"random-{i}", "g": gname,
                            "worst_node_slack": r.worst_node_slack,
                            "verdict": r.verdict, "diagnostics": r.diagnostics})
    return reports


def _battery_gap(cfg, rng, grid):
    psi = parse_profile(cfg.get("psi", "power:2"))
    weight = parse_weight(cfg.get("weight", "unit"))
    reports = []
    f_id = MappingField.identity(grid)
    for name, H in (("id", f_id), ("squeeze-0.1", as_field(squeeze_map(0.1), grid))):
        res = energy_gap(f_id, H, psi, weight)
        ok = res.report["gap_nonnegative"] and res.report["gap_geq_terms"]
        reports.append({"h": "id", "H": name, "gap": res.gap, "term1": res.term1,
                        "term2": res.term2, "certified": res.certified,
                        "verdict": "holds" if ok else "fails",
                        "diagnostics": {k: v for k, v in res.report.items()
                                        if k not in ("certified",)}})
    return reports


def _battery_invariance(cfg, rng, grid):
    psi = parse_profile(cfg.get("psi", "linear"))
    reports = []
    threshold = 1e-4 * max(1.0, (256.0 / grid.n) ** 2)
    for i in range(int(cfg.get("n_maps", 3))):
        fmap = random_boundary_identity_map(grid, rng, amp_range=(0.05, 0.2))
        fld = as_field(fmap, grid)
        gap = mobius_invariance_gap(fld, a=0.3, theta=1.0, psi=psi)
        reports.append({"map": f"qc-{i}", "gap": gap, "threshold": threshold,
                        "verdict": "holds" if gap <= threshold else "fails"})
    return reports


_BATTERIES = {"rs": _battery_rs, "pointwise": _battery_pointwise,
              "gap": _battery_gap, "invariance": _battery_invariance}


def cmd_verify(cfg):
    name = cfg.require("battery")
    if name not in _BATTERIES:
        raise UsageError(f"unknown battery {name!r} (want one of {sorted(_BATTERIES)})")
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    grid = _grid_for(cfg)
    out = _outdir(cfg)
    reports = _BATTERIES[name](cfg, rng, grid)
    serialize.write_json_report(reports, out / f"battery_{name}.json")
    return 0 if all(r["verdict"] == "holds" for r in reports) else 3


def cmd_minimize(cfg):
    grid = _grid_for(cfg)
    psi = parse_profile(cfg.get("psi", "power:2"))
    weight = parse_weight(cfg.get("weight", "unit"))
    start_spec = cfg.get("start", "bump:0.05")
    if start_spec.startswith("bump:"):
        amp = float(start_spec.split(":", 1)[1])
        basis = bump_basis(domain=grid.kind if grid.kind == "disk" else "rect")
        b = max(basis, key=lambda e: e.r)
        bv = b.value(grid.zz)
        vals = grid.zz + amp * bv / max(float(np.abs(bv).max()), 1e-300)
        start = MappingField.from_values(grid, vals)
    else:
        start = as_field(parse_map(start_spec), grid)
    opt = MinimizeOptions(
        grad_tol=float(cfg.get("grad_tol", 1e-5)),
        j_floor=float(cfg.get("j_floor", 1e-3)),
        max_sweeps=int(cfg.get("max_iter", 40)),
        basis_levels=tuple(int(v) for v in cfg.get("basis_levels", "1,2,3").split(",")),
    )
    final, trace = minimize(start.boundary_trace, start, psi, weight, opt)
    out = _outdir(cfg)
    serialize.field_to_csv(grid, final.values, out / "final_field.csv")
    serialize.table_to_csv(out / "trace.csv", ["iter", "energy", "minJ", "dbar"],
                           [[r.sweep for r in trace.rows],
                            [r.energy for r in trace.rows],
                            [r.min_jacobian for r in trace.rows],
                            [r.dbar_residual for r in trace.rows]])
    serialize.write_json_report({"termination": trace.termination,
                                 "start_energy": trace.start_energy,
                                 "final_energy": trace.final_energy,
                                 "accepted_steps": len(trace.rows)},
                                out / "minimize.json")
    return 0


def cmd_export(cfg):
    what = cfg.require("what")
    out = _outdir(cfg)
    grid = _grid_for(cfg)
    fmt = cfg.get("format", "csv")
    if what == "map":
        vals = as_field(parse_map(cfg.require("spec")), grid).values
        role = "mapping"
    elif what == "weight":
        vals = parse_weight(cfg.require("spec")).on_grid(grid).astype(complex)
        role = "weight"
    elif what == "phi":
        mspec, _, rest = cfg.require("spec").partition("@")
        psi = parse_profile(rest or "linear")
        fld = as_field(parse_map(mspec), grid)
        vals = hopf_differential(fld, psi, parse_weight(cfg.get("weight", "unit")) if "weight" in cfg.values else parse_weight("unit")).phi
        role = "differential"
    else:
        raise UsageError(f"unknown export kind {what!r}")
    if fmt == "csv":
        serialize.field_to_csv(grid, vals, out / f"{what}.csv", role=role)
    elif fmt == "json":
        serialize.field_to_json(grid, vals, out / f"{what}.json", role=role)
    else:
        raise UsageError(f"unknown format {fmt!r}")
    return 0


_COMMANDS = {"ode": cmd_ode, "map": cmd_map, "energy": cmd_energy, "hopf": cmd_hopf,
             "verify": cmd_verify, "minimize": cmd_minimize, "export": cmd_export}


def build_parser():
    p = argparse.ArgumentParser(prog="qcenergy",
                                description="Distortion-energy toolkit: fields, ODE "
                                            "families, Hopf differentials, verifiers.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key=value config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--grid", type=int, default=None)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        cfg = load_config(args.command, args)
        return _COMMANDS[args.command](cfg)
    except (UsageError, ConfigurationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except QcError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
