"""Command-line entry point ``osmoflow``.

Exit codes: 0 success, 1 a checked criterion failed, 2 usage or I/O error.
"""

import argparse
import csv
from dataclasses import replace
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig
from .core import InvalidStateError, collocation_grids, constant_state, state_from_json, state_to_json
from .dynamics import StepperConfig, decay_rate_fit, linear_mode_evolve, simulate_radial
from .equilibria import NoEquilibrium, find_equilibrium
from .linop import (assemble_mode_operator, eigen_spectrum, random_admissible_state,
                    remove_kernel_component, spectrum_report)
from .stokes import ModeStokesProblem, solve_stokes_mode, verify_lopatinskii

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _meta(cfg):
    return {"tool": "osmoflow", "version": __version__, "config_sha256": cfg.digest()}


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump(obj))


def _write_csv(path, header, rows, cfg):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# osmoflow {__version__} config_sha256={cfg.digest()}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _emit(args, cfg, payload, name):
    payload = {"meta": _meta(cfg), **payload}
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, name), payload)
    sys.stdout.write(_dump(payload))


def _load_config(args):
    path = getattr(args, "config", None)
    cfg = RunConfig.from_toml(path) if path else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_spectrum(args, cfg):
    sc = cfg.spectrum
    k_max = args.kmax if args.kmax is not None else sc.k_max
    n = args.n or cfg.grid.n
    rep = spectrum_report(cfg.params, n=n, k_max=k_max, tol_zero=sc.tol_zero,
                          n_coarse=cfg.grid.n_coarse if n == cfg.grid.n else n // 2,
                          threshold=sc.spurious_shift)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_csv(os.path.join(args.out, "spectrum.csv"), ["k", "re", "im"], rep.rows(), cfg)
    _emit(args, cfg, rep.to_dict(), "spectrum.json")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_stokes(args, cfg):
    prm = cfg.params
    h = complex(args.h) if args.h is not None else prm.m - args.k**2
    grids = collocation_grids(args.n or cfg.grid.stokes_n, prm.R_container)
    sol = solve_stokes_mode(ModeStokesProblem(args.k, h, 0.0, prm, grids))
    v, pj = sol.v_interface, sol.pressure_jump
    _emit(args, cfg, {"k": args.k, "h_normal": [h.real, h.imag],
                      "v_interface": [float(v.real), float(v.imag)],
                      "pressure_jump": [float(pj.real), float(pj.imag)],
                      "residuals": sol.residuals}, "stokes.json")
    return EXIT_OK


def cmd_verify_ls(args, cfg):
    rep = verify_lopatinskii(args.nu_plus, args.nu_minus, tuple(args.xi))
    exact = -2 * (args.nu_plus + args.nu_minus) ** 2
    ok = rep.min_singular_value > 0 and abs(rep.det_M - exact) <= 1e-14 * abs(exact)
    _emit(args, cfg, {**rep.to_dict(), "passed": ok}, "lopatinskii.json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_equilibrium(args, cfg):
    rc = args.rc if args.rc is not None else cfg.params.R_container
    try:
        roots = find_equilibrium(args.m_plus, args.m_minus, rc, N=cfg.params.N)
    except NoEquilibrium as exc:
        _emit(args, cfg, {"roots": [], "error": str(exc),
                          "profile": exc.profile.tolist()}, "equilibrium.json")
        return EXIT_FAIL
    _emit(args, cfg, {"roots": [e.to_dict() for e in roots]}, "equilibrium.json")
    return EXIT_OK


def cmd_simulate(args, cfg):
    s, prm = cfg.simulate, cfg.params
    if args.init:
        with open(args.init, encoding="utf-8") as fh:
            init = state_from_json(json.load(fh))
    else:
        init = constant_state(s.c_plus, s.c_minus, s.R, prm.R_container, s.n_inner, s.n_outer)
    scfg = StepperConfig(dt=args.dt or s.dt, T_final=args.tfinal or s.t_final,
                         output_every=s.output_every)
    traj = simulate_radial(init, scfg, (prm.kappa_plus, prm.kappa_minus))
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    keys = ["t", "R", "M_plus", "M_minus", "E", "D", "dist", "dist_c"]
    header = ["t", "R", "M+", "M-", "E", "D", "distance", "distance_c"]
    _write_csv(os.path.join(out, "trajectory.csv"), header,
               zip(*(traj[k] for k in keys)), cfg)
    _write_json(os.path.join(out, "final_state.json"),
                {"meta": _meta(cfg), **state_to_json(traj.final_state)})
    summary = {"R_final": traj.final_state.R, "converged": traj.converged, **traj.meta}
    sys.stdout.write(_dump({"meta": _meta(cfg), **summary}))
    return EXIT_OK


def cmd_mode_evolve(args, cfg):
    me, prm = cfg.mode_evolve, cfg.params
    rng = np.random.default_rng(cfg.seed)
    op = assemble_mode_operator(args.k, prm, n=args.n or cfg.grid.n)
    st = random_admissible_state(op, rng)
    st = op.expand(remove_kernel_component(op, op.reduce(st), cfg.spectrum.tol_zero))
    scfg = StepperConfig(dt=args.dt or me.dt, T_final=args.tfinal or me.t_final,
                         output_every=me.output_every)
    traj = linear_mode_evolve(args.k, st, scfg, prm, op=op)
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    _write_csv(os.path.join(out, "mode_norms.csv"), ["t", "norm"], zip(traj.t, traj["norm"]), cfg)
    summary = {"k": args.k}
    if np.all(traj["norm"][1:] > 0):
        fit = decay_rate_fit(traj, me.tail_fraction)
        lam = eigen_spectrum(op).nonzero(cfg.spectrum.tol_zero)
        summary.update(rate=fit.rate, stderr=fit.stderr,
                       leading_eigenvalue=float(lam[0].real) if lam.size else math.nan)
    sys.stdout.write(_dump({"meta": _meta(cfg), **summary}))
    return EXIT_OK


def cmd_verify_all(args, cfg):
    from .verify import run_acceptance

    results = run_acceptance(cfg)
    for res in results:
        sys.stderr.write(res.line() + "\n")
    passed = all(r.passed for r in results)
    payload = {"meta": _meta(cfg), "passed": passed, "criteria": [r.to_dict() for r in results]}
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "verify_report.json"), payload)
    sys.stdout.write(_dump(payload))
    return EXIT_OK if passed else EXIT_FAIL


def build_parser():
    p = _Parser(prog="osmoflow", description="Two-phase Stokes-osmosis toolkit (2D, concentric).")
    p.add_argument("--version", action="version", version=f"osmoflow {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", "--params", dest="config", metavar="FILE",
                        help="TOML run configuration (tables params, grid, spectrum, simulate, "
                             "mode_evolve; default: built-in defaults)")
        sp.add_argument("--seed", type=int, default=None, help="override the configured seed (default 0)")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        return sp

    sp = common(sub.add_parser("spectrum", help="eigenvalues of L+K per mode"))
    sp.add_argument("--kmax", type=int, default=None, help="largest |k| (default 16)")
    sp.add_argument("--n", type=int, default=None, help="nodes per phase (default 128)")
    sp.set_defaults(func=cmd_spectrum)

    sp = common(sub.add_parser("stokes", help="solve one mode of the Stokes problem"))
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--h", type=float, default=None, help="normal traction jump (default m - k^2)")
    sp.add_argument("--n", type=int, default=None, help="nodes per phase (default 48)")
    sp.set_defaults(func=cmd_stokes)

    sp = common(sub.add_parser("verify-ls", help="Lopatinskii-Shapiro check at one frequency"))
    sp.add_argument("--nu+", dest="nu_plus", type=float, required=True)
    sp.add_argument("--nu-", dest="nu_minus", type=float, required=True)
    sp.add_argument("--xi", type=float, nargs="+", required=True)
    sp.set_defaults(func=cmd_verify_ls)

    sp = common(sub.add_parser("equilibrium", help="radial equilibria for given masses"))
    sp.add_argument("--m+", dest="m_plus", type=float, required=True)
    sp.add_argument("--m-", dest="m_minus", type=float, required=True)
    sp.add_argument("--rc", type=float, default=None, help="container radius (default from config)")
    sp.set_defaults(func=cmd_equilibrium)

    sp = common(sub.add_parser("simulate", help="nonlinear radial evolution"))
    sp.add_argument("--init", metavar="FILE", help="initial RadialState JSON (default from config)")
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--tfinal", type=float, default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("mode-evolve", help="linear evolution of one mode"))
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--tfinal", type=float, default=None)
    sp.set_defaults(func=cmd_mode_evolve)

    sp = common(sub.add_parser("verify-all", help="run the acceptance suite"))
    sp.set_defaults(func=cmd_verify_all)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"osmoflow: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_USAGE
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except (OSError, InvalidStateError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"osmoflow: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
