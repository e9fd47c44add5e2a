"""Config-driven experiment runner: define a space and metric in TOML, run
flows and named verifications, emit trajectory CSVs, plot data, and a JSON
summary. Reruns with the same config and seed are bit-identical."""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .catalog import CATALOG_NAMES, catalog as catalog_entry, metric_from_spec, random_adapted_metric
from .curvature import InvariantMetric, scalar_star_terms
from .deform import SubmersionSplit, assemble, submersion_split, retract_horizontal
from .flow import (FlowControls, blowdown, extinction_analysis, integrate,
                   verify_monotonicity, verify_scalar_evolution)
from .homspace import StabilityError, split_u
from .liealg import SemidirectData, algebra_from_dict, algebra_to_dict, is_unimodular
from .serialize import (dumps, split_to_dict, write_channel_csvs,
                        write_gnuplot_script, write_trajectory_csv)
from .stability import is_stable

KNOWN_CHECKS = ("theta-adapted-invariance", "monotonicity", "scalar-evolution",
                "extinction", "equivalence", "blowdown", "stability", "deform-retract")


class StageError(Exception):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


def load_config(path):
    """Parse a TOML config into a list of named experiment dicts."""
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    if "experiment" in cfg:
        exps = cfg["experiment"]
        if not isinstance(exps, list):
            raise StageError("config-validate", "[experiment] must be an array of tables")
        shared = {k: v for k, v in cfg.items() if k != "experiment"}
        out = []
        for i, exp in enumerate(exps):
            merged = dict(shared)
            merged.update(exp)
            merged.setdefault("name", f"exp{i + 1}")
            out.append(merged)
        return out
    cfg.setdefault("name", "run")
    return [cfg]


def resolve_space(space_cfg):
    """(SemidirectData, h_basis) from a catalog name or inline tables."""
    if not isinstance(space_cfg, dict):
        raise StageError("config-validate", "[space] table is required")
    if "catalog" in space_cfg:
        params = {k: v for k, v in space_cfg.items() if k not in ("catalog", "h_basis")}
        try:
            entry = catalog_entry(space_cfg["catalog"], **params)
        except (KeyError, ValueError) as exc:
            raise StageError("config-validate", str(exc)) from None
        h_basis = space_cfg.get("h_basis", entry.h_basis)
        return entry.semidirect, h_basis, entry
    try:
        u = algebra_from_dict(space_cfg["u"])
        dimV = int(space_cfg.get("dimV", 0))
        theta = np.asarray(space_cfg.get("theta", np.zeros((u.dim, dimV, dimV))), dtype=float)
        d = SemidirectData(u, dimV, theta)
    except (KeyError, ValueError) as exc:
        raise StageError("config-validate", f"bad inline space: {exc}") from None
    return d, space_cfg.get("h_basis", ()), None


def build_metric(split, metric_cfg, rng):
    if metric_cfg in (None, "background"):
        return np.eye(split.dim_m)
    if isinstance(metric_cfg, dict) and metric_cfg.get("kind") == "random-adapted":
        kappa = float(metric_cfg.get("kappa", 10.0))
        return random_adapted_metric(split, rng, kappa=kappa)
    try:
        return metric_from_spec(split, metric_cfg)
    except ValueError as exc:
        raise StageError("config-validate", f"bad metric spec: {exc}") from None


def flow_controls(flow_cfg):
    if flow_cfg is None:
        return None
    known = {"kind", "t_max", "rtol", "atol", "h_init", "h_min", "h_max", "extinction_eps"}
    extra = set(flow_cfg) - known
    if extra:
        raise StageError("config-validate", f"unknown [flow] keys: {sorted(extra)}")
    try:
        return FlowControls(**flow_cfg)
    except (TypeError, ValueError) as exc:
        raise StageError("config-validate", f"bad [flow] table: {exc}") from None


def run_experiment(exp, out_dir, seed):
    """Execute one experiment; returns its summary dict (never raises)."""
    name = exp.get("name", "run")
    exp_dir = os.path.join(out_dir, name)
    os.makedirs(exp_dir, exist_ok=True)
    summary = {"name": name, "seed": seed, "checks": {}, "status": None,
               "extinction": None, "barrier": None, "stage_error": None}
    rng = np.random.default_rng(seed)
    traj = None
    try:
        checks = exp.get("checks", [])
        unknown = [c for c in checks if c not in KNOWN_CHECKS]
        if unknown:
            raise StageError("config-validate",
                             f"unknown checks {unknown}; known: {list(KNOWN_CHECKS)}")
        d, h_basis, entry = resolve_space(exp.get("space"))
        controls = flow_controls(exp.get("flow"))
        summary["space"] = exp.get("space")

        try:
            split = split_u(d, h_basis)
        except StabilityError as exc:
            raise StageError("split", str(exc)) from None
        except ValueError as exc:
            raise StageError("split", str(exc)) from None
        with open(os.path.join(exp_dir, "split.json"), "w") as fh:
            fh.write(dumps(split_to_dict(split)))

        P0 = build_metric(split, exp.get("metric"), rng)
        try:
            g0 = InvariantMetric(split, P0)
        except ValueError as exc:
            raise StageError("metric", str(exc)) from None

        if controls is not None:
            try:
                traj = integrate(split, g0, controls)
            except Exception as exc:
                raise StageError("integrate", str(exc)) from None
            summary["status"] = traj.status
            summary["adapted"] = bool(traj.adapted)
            summary["samples"] = int(len(traj.times))
            if traj.extinction is not None:
                summary["extinction"] = {
                    "extinction_time": traj.extinction.T_est,
                    "bracket": list(traj.extinction.bracket),
                    "width": traj.extinction.width,
                }
            formats = exp.get("outputs", {}).get("formats", ["csv", "summary", "plots"])
            if "csv" in formats:
                write_trajectory_csv(traj, os.path.join(exp_dir, "trajectory.csv"))
            if "plots" in formats:
                write_channel_csvs(traj, os.path.join(exp_dir, "plots"))
            if "gnuplot" in formats:
                write_gnuplot_script(traj, os.path.join(exp_dir, "plots.gp"))

        for check in checks:
            summary["checks"][check] = _run_check(check, exp, split, d, g0, traj,
                                                  controls, rng, summary)
    except StageError as exc:
        summary["stage_error"] = {"stage": exc.stage, "message": exc.message}
        with open(os.path.join(exp_dir, "FAILED"), "w") as fh:
            fh.write(f"{exc.stage}: {exc.message}\n")
    ok = summary["stage_error"] is None and all(
        c["status"] != "fail" for c in summary["checks"].values())
    summary["exit_ok"] = bool(ok)
    with open(os.path.join(exp_dir, "summary.json"), "w") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    return summary


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _run_check(check, exp, split, d, g0, traj, controls, rng, summary):
    """Dispatch one named verification; returns a status dict."""
    def skipped(note):
        return {"status": "skipped", "note": note}

    if check == "stability":
        verdict = is_stable(d)
        expect = exp.get("expect_stability", "stable")
        got = "stable" if verdict.stable else "not-stable"
        return {"status": "pass" if got == expect else "fail", "verdict": got,
                "residual": verdict.residual, "certified": verdict.certified,
                "note": verdict.note}

    if check == "deform-retract":
        if len(split.V_pos) == 0:
            return skipped("not applicable: V = 0")
        ss = submersion_split(split, g0.P)
        phi = 0.3 * rng.standard_normal(ss.phi.shape)
        seeded = SubmersionSplit(split=split, gB=ss.gB, gF=ss.gF, phi=phi)
        base = submersion_split(split, assemble(seeded))
        grid = np.linspace(0.0, 1.0, 11)
        vals, oneill = [], []
        for t in grid:
            Pt = retract_horizontal(base, t).P
            terms = scalar_star_terms(split, Pt)
            vals.append(terms[0] - 0.25 * terms[1] - 0.5 * terms[2] - 0.5 * terms[3])
            oneill.append(terms[1])
        vals = np.array(vals)
        oneill = np.array(oneill)
        mono = bool(np.all(np.diff(vals) >= -1e-10 * max(1.0, np.max(np.abs(vals)))))
        quad = oneill[0] * (1.0 - grid) ** 2
        quad_ok = bool(np.max(np.abs(oneill - quad)) <= 1e-10 * max(1.0, oneill[0]))
        status = "pass" if (mono and quad_ok) else "fail"
        return {"status": status, "rscal_star_monotone": mono, "oneill_quadratic": quad_ok}

    if traj is None:
        return skipped("not applicable: no flow was run")

    if check == "theta-adapted-invariance":
        if not traj.adapted:
            return skipped("not applicable: initial metric is not theta-adapted")
        worst = float(np.max(traj.monitors["adapted_residual"]))
        return {"status": "pass" if worst <= 1e-8 else "fail", "max_residual": worst}

    if check == "monotonicity":
        if not traj.adapted:
            return skipped("not applicable: initial metric is not theta-adapted")
        rep = verify_monotonicity(traj)
        worst = {k: v[1] for k, v in rep.checks.items() if not v[0]}
        return {"status": "pass" if rep.ok else "fail", "violations": worst,
                "note": rep.note}

    if check == "scalar-evolution":
        if len(traj.times) < 3:
            return skipped("not applicable: fewer than 3 samples")
        rep = verify_scalar_evolution(traj)
        tol = float(exp.get("scalar_evolution_tol", 1e-3))
        return {"status": "pass" if rep.max_deviation <= tol else "fail",
                "max_deviation": rep.max_deviation, "tol": tol}

    if check == "extinction":
        if not traj.adapted:
            return skipped("not applicable: initial metric is not theta-adapted")
        rep = extinction_analysis(traj, split)
        if not rep.applicable:
            return skipped(rep.note)
        out = {"status": "pass" if (rep.certified and traj.status == "extinct") else "fail",
               "b0": rep.b0, "slope": rep.slope, "C_tilde": rep.C_tilde,
               "barrier_root": rep.barrier_root, "violation": rep.barrier_violation,
               "note": rep.note}
        if traj.extinction:
            out["extinction_time"] = traj.extinction.T_est
        return out

    if check == "equivalence":
        if not is_unimodular(split.algebra):
            return skipped("not applicable: the algebra is not unimodular")
        other = FlowControls(kind="unimodular" if controls.kind == "ricci" else "ricci",
                             t_max=controls.t_max, rtol=controls.rtol, atol=controls.atol,
                             h_init=controls.h_init, h_min=controls.h_min,
                             h_max=controls.h_max, extinction_eps=controls.extinction_eps)
        traj2 = integrate(split, g0, other)
        t_hi = min(traj.times[-1], traj2.times[-1])
        grid = np.linspace(0.0, t_hi, 64)
        dev = max(float(np.max(np.abs(traj.metric_at(t) - traj2.metric_at(t))))
                  for t in grid)
        scale = max(1.0, float(np.max(np.abs(traj.metrics[0]))))
        ok = dev <= 10.0 * controls.rtol * scale
        return {"status": "pass" if ok else "fail", "max_deviation": dev,
                "bound": 10.0 * controls.rtol * scale}

    if check == "blowdown":
        s_values = exp.get("blowdown_s", [1, 2, 4, 8, 16])
        rep = blowdown(traj, s_values)
        norms = [e.ric_norm for e in rep.entries]
        ok = all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
        return {"status": "pass" if ok else "fail", "t_ref": rep.t_ref,
                "s": [e.s for e in rep.entries], "ric_norms": norms}

    return skipped("unrecognized check")


def cmd_run(args):
    try:
        exps = load_config(args.config)
    except StageError as exc:
        print(f"FAIL {exc}", file=sys.stderr)
        return 1
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"FAIL [config-validate] {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    seeds = [args.seed for _ in exps]
    if args.jobs > 1 and len(exps) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(run_experiment, exps,
                                      [args.out] * len(exps), seeds))
    else:
        summaries = [run_experiment(exp, args.out, seed)
                     for exp, seed in zip(exps, seeds)]
    ok = True
    for s in summaries:
        if s["stage_error"]:
            print(f"FAIL {s['name']}: stage {s['stage_error']['stage']}: "
                  f"{s['stage_error']['message']}")
            ok = False
            continue
        for cname, c in s["checks"].items():
            line = f"{s['name']}: {cname}: {c['status'].upper()}"
            if c["status"] == "skipped":
                line += f" ({c['note']})"
            print(line)
            ok = ok and c["status"] != "fail"
        if not s["checks"]:
            print(f"{s['name']}: done ({s.get('status') or 'no flow'})")
    return 0 if ok else 1


def cmd_check(args):
    """Validate a config (space, metric, controls) without integrating."""
    try:
        exps = load_config(args.config)
        for exp in exps:
            d, h_basis, _ = resolve_space(exp.get("space"))
            flow_controls(exp.get("flow"))
            split = split_u(d, h_basis)
            rng = np.random.default_rng(args.seed)
            P0 = build_metric(split, exp.get("metric"), rng)
            InvariantMetric(split, P0)
            unknown = [c for c in exp.get("checks", []) if c not in KNOWN_CHECKS]
            if unknown:
                raise StageError("config-validate", f"unknown checks {unknown}")
            print(f"{exp.get('name', 'run')}: ok "
                  f"(dim m = {split.dim_m}, weights = {len(split.weights)})")
    except StageError as exc:
        print(f"FAIL {exc}", file=sys.stderr)
        return 1
    except StabilityError as exc:
        print(f"FAIL [split] {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"FAIL [config-validate] {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_catalog(args):
    if args.action == "list":
        for name in CATALOG_NAMES:
            entry = catalog_entry(name)
            print(f"{name}: {entry.description}")
        return 0
    entry = catalog_entry(args.name)
    info = {"name": entry.name, "description": entry.description,
            "params": entry.params, "stable": entry.stable,
            "algebra": algebra_to_dict(entry.algebra),
            "suggested_metrics": entry.metrics}
    if entry.stable:
        info["split"] = split_to_dict(entry.split())
    else:
        info["split"] = None
        info["note"] = "theta is not stable; no adapted decomposition exists"
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ricciflow",
        description="Homogeneous (unimodular) Ricci flow experiments from TOML configs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cat = sub.add_parser("catalog", help="list or show the example spaces")
    p_cat.add_argument("action", choices=["list", "show"])
    p_cat.add_argument("name", nargs="?", help="catalog entry for 'show'")
    p_cat.set_defaults(func=cmd_catalog)

    p_run = sub.add_parser("run", help="run experiments from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.set_defaults(func=cmd_run)

    p_chk = sub.add_parser("check", help="validate a config without running")
    p_chk.add_argument("--config", required=True)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.set_defaults(func=cmd_check)

    args = parser.parse_args(argv)
    if args.command == "catalog" and args.action == "show" and not args.name:
        parser.error("catalog show needs a name")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
