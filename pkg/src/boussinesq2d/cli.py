"""
Command-line interface.

Exit codes: 0 success, 2 configuration or input error, 3 blow-up,
4 a verification check failed. The output directory is ``--out`` if given,
else ``$BOUSSINESQ_OUT_DIR``, else ``run.output_dir`` from the config.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from boussinesq2d import cases, config as config_mod, estimates, inequalities
from boussinesq2d.diagnostics import INTEGRANDS, SCALAR_COLUMNS, BudgetLedger
from boussinesq2d.errors import BlowUpError, BoussinesqError, ConfigurationError, FormatError
from boussinesq2d.runner import simulate
from boussinesq2d.snapshot import Snapshot

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_CHECK = 0, 2, 3, 4
OUT_ENV = "BOUSSINESQ_OUT_DIR"
CONFIG_NAME = "config.txt"
CSV_NAME = "diagnostics.csv"
FINAL_SNAPSHOT = "final.absq"
INT_COLUMNS = tuple(INTEGRANDS) + ("work",)
CSV_COLUMNS = (("t",) + SCALAR_COLUMNS + tuple(INTEGRANDS)
               + tuple("int_" + n for n in INT_COLUMNS) + ("M_empirical",))
MAX_PRINCIPLE_TOL = 1e-3


def fmt(x):
    return f"{x:.16e}"


def csv_row(rec):
    vals = [rec.t] + [getattr(rec, c) for c in SCALAR_COLUMNS]
    vals += [rec.dissipation[n] for n in INTEGRANDS]
    vals += [rec.integrals[n] for n in INT_COLUMNS]
    vals.append(rec.M_empirical)
    return ",".join(fmt(v) for v in vals) + "\n"


def read_csv_rows(path):
    """Data rows of a diagnostics CSV as dicts of floats; comment lines skipped."""
    rows = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                continue
            rows.append(dict(zip(header, (float(p) for p in parts))))
    return rows


def resolve_out(arg, cfg):
    return Path(arg or os.environ.get(OUT_ENV) or cfg.output_dir)


def _load_config(path):
    if path is None:
        return config_mod.RunConfig()
    return config_mod.load(path)


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def summarize(history, cfg, status, steps, message=""):
    """Summary of a run: max norms, budget residuals, criteria, M_empirical."""
    visc = cfg.build_viscosity()
    out = {"status": status, "message": message, "case": cfg.case_label, "buoyancy": cfg.buoyancy,
           "steps": steps, "records": len(history)}
    if not history:
        return out
    first = history[0]
    out["t_start"], out["t_end"] = first.t, history[-1].t
    out["max_norms"] = {
        "theta_Linf": max(r.theta_Linf for r in history),
        "theta_L2": max(r.theta_L2 for r in history),
        "u_L2": max(r.u_L2 for r in history),
        "u_H2": max(r.u_H2 for r in history),
        "theta_H2": max(r.theta_H2 for r in history),
        "grad_u_Linf": max(r.grad_u_Linf for r in history),
    }
    out["M_empirical"] = max(r.M_empirical for r in history)
    out["criterion_integrals"] = {n: history[-1].integrals[n] for n in INT_COLUMNS}
    checks = {
        "max_principle_Linf": out["max_norms"]["theta_Linf"] <= first.theta_Linf * (1 + MAX_PRINCIPLE_TOL) + 1e-300,
        "max_principle_L2": all(r.theta_L2 <= first.theta_L2 * (1 + 1e-6) + 1e-300 for r in history),
    }
    if len(history) >= 2:
        th = estimates.check_theta_energy(history, visc)
        ve = estimates.check_velocity_energy(history, visc)
        out["budget_residuals"] = {"theta_energy": th.max_abs, "velocity_energy": ve.max_abs}
        crit = estimates.monitor_criteria(history, cfg.case_id)
        out["criteria"] = {"integrals": crit.integrals, "slopes": crit.slopes, "flags": crit.flags,
                           "rule": crit.rule}
        bounds = estimates.check_case_bounds(history, cfg.case_id)
        out["bounds"] = {"asserted": bounds.asserted, "passed": bounds.passed,
                         "max_norms": bounds.max_norms, "integrals": bounds.integrals}
    out["checks"] = checks
    return out


def _write_json(path, obj):
    path.write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _execute(cfg, state, out, csv_mode, ledger_initial=None, resume_marker=None):
    """Shared body of ``run`` and ``resume``."""
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_NAME).write_text(config_mod.serialize(cfg), encoding="utf-8")
    visc, F = cfg.build_viscosity(), cfg.build_buoyancy()
    ledger = BudgetLedger(state, F, ledger_initial)
    csv_path = out / CSV_NAME
    with open(csv_path, csv_mode, encoding="utf-8", newline="\n") as fh:
        if csv_mode == "w":
            fh.write(",".join(CSV_COLUMNS) + "\n")
        if resume_marker:
            fh.write(resume_marker + "\n")

        def on_record(rec, s):
            fh.write(csv_row(rec))
            fh.flush()

        def on_step(s, i):
            if cfg.checkpoint_interval and i % cfg.checkpoint_interval == 0:
                Snapshot.from_state(s, cfg.case_label, cfg.buoyancy).save(
                    out / f"snapshot_t{s.t:.6f}.absq")

        try:
            result = simulate(state, visc, F, cfg.stepper, cfg.t_final, cfg.cadence, cfg.lp,
                              ledger=ledger, on_record=on_record, on_step=on_step,
                              record_initial=resume_marker is None)
        except BlowUpError as exc:
            history = getattr(exc, "history", [])
            _write_json(out / "summary.json", summarize(history, cfg, "blow-up", None, str(exc)))
            print(f"blow-up: {exc}", file=sys.stderr)
            return EXIT_BLOWUP
    # a no-op resume leaves the existing snapshot untouched (a transform round trip is not bit-exact)
    if result.steps or not (out / FINAL_SNAPSHOT).exists():
        Snapshot.from_state(result.state, cfg.case_label, cfg.buoyancy).save(out / FINAL_SNAPSHOT)
    summary = summarize(result.history, cfg, "ok", result.steps)
    _write_json(out / "summary.json", summary)
    print(f"{cfg.case_label}: {result.steps} steps to t={result.state.t:.6g}; artifacts in {out}")
    return EXIT_OK


def cmd_run(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = config_mod.from_mapping({**config_mod.to_mapping(cfg), "initial.seed": str(args.seed)})
    out = resolve_out(args.out, cfg)
    return _execute(cfg, cfg.build_state(), out, "w")


def cmd_resume(args):
    snap_path = Path(args.snapshot)
    snap = Snapshot.load(snap_path)
    cfg_path = args.config or snap_path.parent / CONFIG_NAME
    if not Path(cfg_path).exists():
        raise ConfigurationError(f"no configuration found at {cfg_path}; pass --config")
    cfg = config_mod.load(cfg_path).with_overrides(args.set or [])
    if cfg.build_grid() != snap.grid:
        raise ConfigurationError(f"snapshot grid {snap.grid.shape} does not match the configuration")
    if snap.case_id != cfg.case_label or snap.buoyancy != cfg.buoyancy:
        raise ConfigurationError(
            f"snapshot was written by {snap.case_id}/{snap.buoyancy}, config is {cfg.case_label}/{cfg.buoyancy}"
        )
    out = Path(args.out or os.environ.get(OUT_ENV) or snap_path.parent)
    csv_path = out / CSV_NAME
    initial = None
    if csv_path.exists():
        rows = [r for r in read_csv_rows(csv_path) if abs(r["t"] - snap.t) <= 1e-12 * max(1.0, abs(snap.t))]
        if rows:
            initial = {n: rows[-1]["int_" + n] for n in INT_COLUMNS}
        mode = "a"
    else:
        mode = "w"
    marker = f"# resumed at t={fmt(snap.t)}" + ("" if initial else " (integrals restarted)")
    return _execute(cfg, snap.to_state(), out, mode, initial, marker)


def cmd_verify_inequalities(args):
    reports = inequalities.run_inequalities(args.trials, args.resolution, args.seed)
    reports += inequalities.run_identity_checks(min(args.trials, 100), args.resolution, args.seed)
    text = inequalities.reports_to_csv(reports)
    sys.stdout.write(text)
    if args.out or os.environ.get(OUT_ENV):
        out = Path(args.out or os.environ[OUT_ENV])
        out.mkdir(parents=True, exist_ok=True)
        (out / "inequalities.csv").write_text(text, encoding="utf-8")
    ok = all(math.isfinite(r.max_ratio) for r in reports)
    for r in reports:
        if r.id.endswith("_p2"):
            ok &= abs(r.max_ratio - 1.0) <= 1e-10
        elif r.id.startswith("identity_"):
            ok &= r.max_ratio <= 1e-10
    return EXIT_OK if ok else EXIT_CHECK


def cmd_stability(args):
    cfg = _load_config(args.config)
    rep = estimates.stability_experiment(cfg, args.perturbation)
    lines = ["t,diff_sq,envelope,ratio\n"]
    lines += [f"{fmt(t)},{fmt(d)},{fmt(e)},{fmt(r)}\n"
              for t, d, e, r in zip(rep.times, rep.diff_sq, rep.envelope, rep.ratios)]
    out = resolve_out(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "stability.csv").write_text("".join(lines), encoding="utf-8")
    print(f"stability: tightness={rep.tightness:.3e} final_difference={rep.final_difference:.3e} "
          f"{'PASS' if rep.passed else 'FAIL'}")
    if rep.aborted:
        print(f"aborted: {rep.error}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_symmetry(args):
    cfg = _load_config(args.config)
    rep = cases.verify_symmetry(cfg, tol=args.tol)
    out = resolve_out(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "symmetry.csv").write_text(
        "t,deviation\n" + "".join(f"{fmt(t)},{fmt(d)}\n" for t, d in zip(rep.times, rep.deviations)),
        encoding="utf-8",
    )
    print(f"symmetry: max_deviation={rep.max_deviation:.3e} tol={args.tol:.1e} "
          f"{'PASS' if rep.passed else 'FAIL'}")
    if rep.aborted:
        print(f"aborted: {rep.error}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_cases(args):
    for n in sorted(cases.CASE_ROWS):
        print(f"case{n:<3d} {cases.case_matrix(n)}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="boussinesq2d", description="Anisotropic 2D Boussinesq simulator and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a configuration and write diagnostics")
    r.add_argument("--config")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify-inequalities", help="Monte-Carlo inequality constants")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--resolution", type=int, default=64)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify_inequalities)

    s = sub.add_parser("stability", help="two-trajectory Gronwall experiment")
    s.add_argument("--config")
    s.add_argument("--perturbation", type=float, default=1e-6)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stability)

    y = sub.add_parser("symmetry", help="axis-swap symmetry cross-check")
    y.add_argument("--config")
    y.add_argument("--tol", type=float, default=1e-8)
    y.add_argument("--out")
    y.set_defaults(func=cmd_symmetry)

    m = sub.add_parser("resume", help="continue a run from a snapshot")
    m.add_argument("snapshot")
    m.add_argument("--config")
    m.add_argument("--out")
    m.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    m.set_defaults(func=cmd_resume)

    c = sub.add_parser("cases", help="print the twelve viscosity matrices")
    c.set_defaults(func=cmd_cases)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except BoussinesqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
