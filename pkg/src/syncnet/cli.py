"""Command-line front end.

    syncnet <analyze|simulate|critical|sweep|persistence> --config <path>
            [--out <dir>] [--seed <int>] [--quiet]

Every invocation writes ``report.json`` (effective configuration plus
results) into the output directory when it can, together with the CSV files
of the command. Exit status: 0 success, 1 invalid input or unwritable
output, 2 runtime failure.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import export
from .config import (COMMANDS, ConfigError, build_run_config, json_safe,
                     parse_config, with_overrides)
from .dynamics import _run, _steps
from .exceptions import SyncnetError, ValidationError
from .experiments import (beta_sweep, classify_run, coupling_family, empirical_varrho,
                          estimate_decay_rate, find_critical_coupling, initial_state,
                          pairwise_spread, persistence_experiment)
from .network import build_laplacian, spectral_gap
from .stability import analyze, compute_gamma, coupling_spec, persistence_bound

__all__ = ["main", "run", "build_parser"]

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="syncnet", description="Synchronisation of coupled networks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def _coupling_spec(cfg):
    cj = cfg.system.coupling_jordan
    return coupling_spec(np.array(cfg.system.coupling.Gamma),
                         None if cj is None else (np.array(cj[0]), np.array(cj[1])))


def _varrho(cfg):
    a = cfg.analysis
    if a.varrho is not None:
        return a.varrho
    if cfg.system.field is None:
        return None
    return empirical_varrho(build_run_config(cfg))


def _analysis(cfg):
    s, a = cfg.system, cfg.analysis
    bundle = build_laplacian(np.array(s.W))
    cspec = _coupling_spec(cfg)
    out = {"laplacian_spectrum": bundle.spectrum, "coupling_spectrum": cspec.beta_spectrum,
           "connected": bundle.is_connected, "laplacian_symmetric": bundle.is_symmetric}
    if bundle.is_symmetric:
        out["spectral_gap"] = spectral_gap(bundle)
    gamma = compute_gamma(bundle, cspec)
    varrho = _varrho(cfg)
    lj = s.laplacian_jordan
    if varrho is None:
        out.update(gamma=gamma, a3_satisfied=gamma > 0, rho_bound=None, varrho=None,
                   alpha_threshold=None)
        return out, None
    res = analyze(bundle, cspec, varrho, jordan_eps_ratio=a.jordan_eps_ratio, c=a.c, K=a.K,
                  laplacian_jordan=None if lj is None else (np.array(lj[0]), np.array(lj[1])),
                  eps_L=a.eps_L)
    out.update(res.to_dict(s.alpha))
    return out, res


def _cmd_analyze(cfg, outdir):
    results, _ = _analysis(cfg)
    return results, []


def _cmd_simulate(cfg, outdir):
    rc = build_run_config(cfg)
    X0, burn_div = initial_state(rc)
    steps = _steps(rc.t_burn, rc.t_end, rc.dt)
    tr = _run(rc.system, X0, rc.t_burn, steps, rc.dt, rc.method, rc.divergence_guard,
              rc.record_every)
    files = [("trajectory.csv", lambda path: export.write_trajectory_csv(tr, path, cfg.output.csv_form))]
    results = {"diverged": bool(tr.diverged or burn_div), "t_diverged": tr.t_diverged,
               "samples": len(tr.times), "final_state": tr.final}
    if rc.system.n >= 2:
        spread = np.array([pairwise_spread(X) for X in tr.states])
        fit = estimate_decay_rate(tr.times, spread)
        results.update(initial_spread=spread[0], final_spread=spread[-1], decay_rate=fit.rate)
        files.append(("spread.csv", lambda path: export.write_series_csv(tr.times, spread, "spread", path)))
    if results["diverged"]:
        results["failure"] = f"trajectory left the guard ball at t = {tr.t_diverged}"
    return results, files


def _gamma_of(cfg, coupling):
    try:
        return compute_gamma(build_laplacian(np.array(cfg.system.W)),
                             coupling_spec(np.asarray(coupling.Gamma)))
    except SyncnetError:
        return None


def _cmd_critical(cfg, outdir):
    rc = build_run_config(cfg)
    sr = cfg.search
    res = find_critical_coupling(rc, sr.bracket, sr.tol, rel_tol=sr.rel_tol,
                                 beta=cfg.system.coupling.beta,
                                 gamma=_gamma_of(cfg, rc.system.coupling),
                                 scan_points=sr.scan_points, max_doublings=sr.max_doublings)
    run = classify_run(rc.with_alpha(res.alpha_c))
    results = {**res.to_dict(), "at_alpha_c": run.summary()}
    return results, [("critical.csv", lambda path: export.write_sweep_csv([res], path))]


def _cmd_sweep(cfg, outdir):
    rc = build_run_config(cfg)
    sr = cfg.search
    family = coupling_family(rc.system)
    sweep = beta_sweep(rc, sr.beta_grid, sr.bracket, sr.tol, rel_tol=sr.rel_tol,
                       gamma_fn=lambda b: _gamma_of(cfg, family(b)),
                       fit_range=sr.fit_range, scan_points=sr.scan_points,
                       max_doublings=sr.max_doublings)
    return sweep.to_dict(), [("sweep.csv", lambda path: export.write_sweep_csv(sweep.results, path))]


def _cmd_persistence(cfg, outdir):
    rc = build_run_config(cfg)
    bound = None
    note = None
    if cfg.system.eps0 is not None:
        try:
            _, res = _analysis(cfg)
            if res is not None and res.a3_satisfied:
                bound = persistence_bound(res.C_estimate, cfg.system.eps0, cfg.system.alpha,
                                          res.gamma, res.rho_bound)
        except SyncnetError as exc:
            note = f"no bound: {exc}"
    pr = persistence_experiment(rc, cfg.analysis.tail_fraction, bound)
    results = pr.summary()
    if note:
        results["bound_note"] = note
    if pr.diverged:
        results["failure"] = "perturbed network diverged"
    return results, [("es.csv", lambda path: export.write_series_csv(pr.times, pr.es_series, "e_s", path))]


_COMMANDS = {"analyze": _cmd_analyze, "simulate": _cmd_simulate, "critical": _cmd_critical,
             "sweep": _cmd_sweep, "persistence": _cmd_persistence}


def _write_report(outdir, report):
    outdir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(json_safe(report), indent=2, sort_keys=True, allow_nan=False)
    (outdir / "report.json").write_text(text + "\n", encoding="utf-8")


def run(cfg, quiet=True):
    """Execute a parsed configuration; returns ``(exit_code, report)``."""
    outdir = Path(cfg.output.dir)
    report = {"command": cfg.command, "config": cfg.to_dict(), "status": "ok"}
    code = EXIT_OK
    files = []
    try:
        results, files = _COMMANDS[cfg.command](cfg, outdir)
        report["results"] = results
        if "failure" in results:
            code = EXIT_RUNTIME
            report["status"] = "failed"
    except ValidationError as exc:
        code, report["status"], report["error"] = EXIT_INVALID, "invalid", f"{type(exc).__name__}: {exc}"
    except (SyncnetError, ArithmeticError, np.linalg.LinAlgError) as exc:
        code, report["status"], report["error"] = EXIT_RUNTIME, "error", f"{type(exc).__name__}: {exc}"
    report["exit_code"] = code
    try:
        _write_report(outdir, report)
        for name, writer in files:
            writer(outdir / name)
    except OSError as exc:
        report["exit_code"] = EXIT_INVALID
        report["status"] = "io_error"
        report["error"] = f"cannot write output: {exc}"
        code = EXIT_INVALID
    if not quiet:
        _print_summary(report)
    return code, report


def _print_summary(report):
    res = report.get("results") or {}
    keys = ("gamma", "alpha_threshold", "a3_satisfied", "alpha_c", "rho_c", "slope",
            "limsup_estimate", "diverged", "decay_rate")
    shown = {k: res[k] for k in keys if k in res}
    print(f"{report['command']}: {report['status']}")
    for k, v in json_safe(shown).items():
        print(f"  {k} = {v}")
    if "error" in report:
        print(f"  error: {report['error']}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, args.command)
    except (OSError, UnicodeDecodeError, ConfigError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        print(f"syncnet: {msg}", file=sys.stderr)
        if args.out:
            try:
                _write_report(Path(args.out), {"command": args.command, "status": "invalid",
                                               "error": msg, "exit_code": EXIT_INVALID})
            except OSError:
                pass
        return EXIT_INVALID
    cfg = with_overrides(cfg, seed=args.seed, out=args.out)
    code, _ = run(cfg, quiet=args.quiet)
    return code


if __name__ == "__main__":
    sys.exit(main())
