"""Command-line entry point.

    combsim analyze CONFIG -o dint.csv
    combsim solve   CONFIG -o run.zip [--seed N]
    combsim steady  CONFIG -o steady.zip [--detuning -5e9hz] [--guess run.zip --ind K | --soliton]
    combsim export  BUNDLE --what {spectra,combpower,time} [--ind K] -o out.csv

Data and output paths go to stdout, diagnostics and progress to stderr.

Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
3 dispersion error, 4 step collapse (bundle still written), 5 steady-state
solver did not converge (bundle still written unless the Jacobian was
singular), 6 snapshot index out of range, 7 unreadable or incompatible
bundle.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from tqdm import tqdm

from . import analysis
from .dispersion import fit_integrated_dispersion, parse_dispersion_file, raw_dint
from .errors import (
    BundleError,
    ConfigError,
    DispersionError,
    IndexOutOfRange,
    IoFailure,
    SingularJacobian,
    StepCollapse,
)
from .lle import EvolutionRecord, build_plan, modal_to_envelope, solve_temporal
from .persistence import load_config, load_results, save_results
from .steady import solve_steady_state, soliton_guess

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_DISPERSION = 3
EXIT_STEP_COLLAPSE = 4
EXIT_NO_CONVERGENCE = 5
EXIT_INDEX = 6
EXIT_BUNDLE = 7


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _err(msg):
    print(msg, file=sys.stderr)


def parse_detuning(text):
    """rad/s by default; a trailing ``hz`` converts from Hz (multiplies by 2*pi)."""
    t = text.strip().lower()
    scale = 1.0
    if t.endswith("hz"):
        t, scale = t[:-2], 2 * math.pi
    try:
        return float(t) * scale
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid detuning {text!r}") from None


def _load_config(path):
    try:
        return load_config(path)
    except FileNotFoundError as exc:
        raise _Fail(EXIT_CONFIG, f"config not found: {exc.filename}") from exc
    except ConfigError as exc:
        raise _Fail(EXIT_CONFIG, f"config error: {exc}") from exc


def _profile(cfg, mu_sim=None):
    try:
        table = parse_dispersion_file(cfg.res.dispfile)
        profile = fit_integrated_dispersion(
            table, cfg.sim.f_pmp, cfg.sim.mu_fit, mu_sim or cfg.sim.mu_sim, cfg.res.R
        )
    except FileNotFoundError as exc:
        raise _Fail(EXIT_DISPERSION, f"dispersion file not found: {exc.filename}") from exc
    except (DispersionError, ValueError) as exc:
        raise _Fail(EXIT_DISPERSION, f"dispersion error: {exc}") from exc
    return table, profile


def _plan(cfg, profile, seed=None):
    sim = cfg.sim
    if seed is not None:
        sim = replace(sim, seed=seed)
    s = cfg.solver
    return build_plan(cfg.res, sim, profile, tol=s.tol, maxiter=s.maxiter, step_factor=s.step_factor)


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, str):
        return x
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def _write_csv(path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from exc


def extrapolated_sign_changes(profile):
    """Pairs of adjacent grid modes where an extrapolated ``Dint`` changes sign."""
    d = profile.dint
    ext = profile.extrapolated_mask
    mu = profile.mu_grid
    s = np.sign(d)
    flips = (s[:-1] * s[1:] < 0) & (ext[:-1] | ext[1:])
    return [(int(mu[i]), int(mu[i + 1])) for i in np.flatnonzero(flips)]


def cmd_analyze(args):
    cfg = _load_config(args.config)
    table, profile = _profile(cfg)
    _, fit = _profile(cfg, mu_sim=cfg.sim.mu_fit)
    mu_raw, d_raw = raw_dint(table, profile)

    raw = dict(zip(mu_raw.tolist(), d_raw.tolist()))
    fitted = dict(zip(fit.mu_grid.tolist(), fit.dint.tolist()))
    sim = dict(zip(profile.mu_grid.tolist(), profile.dint.tolist()))
    ext = dict(zip(profile.mu_grid.tolist(), profile.extrapolated_mask.tolist()))
    rows = []
    for mu in sorted(set(raw) | set(fitted) | set(sim)):
        flag = "" if mu not in ext else int(ext[mu])
        rows.append((mu, raw.get(mu), fitted.get(mu), sim.get(mu), flag))
    _write_csv(args.out, ["mu", "dint_raw_rads", "dint_fit_rads", "dint_sim_rads", "extrapolated"], rows)

    for a, b in extrapolated_sign_changes(profile):
        _err(f"warning: extrapolated Dint changes sign between mu={a} and mu={b}; "
             "zero crossings from extrapolation are likely artifacts")
    _err(f"D1/2pi = {profile.d1 / 2 / math.pi:.6g} Hz, m0 = {profile.m0}, "
         f"neff = {profile.neff_pmp:.5g}, ng = {profile.ng_pmp:.5g}")
    print(args.out)
    return EXIT_OK


class _Progress:
    def __init__(self, enabled):
        self.bar = tqdm(total=1000, file=sys.stderr, desc="LLE", unit="‰", disable=not enabled,
                        bar_format="{desc}: {percentage:5.1f}%|{bar}| {elapsed}<{remaining}")
        self.done = 0

    def __call__(self, fraction):
        n = int(round(fraction * 1000))
        if n > self.done:
            self.bar.update(n - self.done)
            self.done = n

    def close(self):
        self.bar.close()


def cmd_solve(args):
    cfg = _load_config(args.config)
    _, profile = _profile(cfg)
    plan = _plan(cfg, profile, seed=args.seed)
    progress = _Progress(not args.quiet)
    code = EXIT_OK
    try:
        record = solve_temporal(plan, progress=progress)
    except StepCollapse as exc:
        record = exc.record
        _err(f"error: {exc}")
        code = EXIT_STEP_COLLAPSE
    finally:
        progress.close()
    try:
        save_results(record, args.out, config=cfg)
    except IoFailure as exc:
        raise _Fail(EXIT_IO, str(exc)) from exc
    print(args.out)
    return code


def cmd_steady(args):
    cfg = _load_config(args.config)
    dw = args.detuning if args.detuning is not None else cfg.sim.domega
    if dw is None:
        raise _Fail(EXIT_CONFIG, "no detuning: pass --detuning or set 'domega' (δω) in the sim section")
    _, profile = _profile(cfg)
    plan = _plan(cfg, profile)

    guess = None
    if args.guess is not None:
        rec = _load_bundle(args.guess)
        if not isinstance(rec, EvolutionRecord):
            raise _Fail(EXIT_BUNDLE, f"{args.guess} is not a temporal bundle")
        ind = len(rec) - 1 if args.ind is None else args.ind
        if not 0 <= ind < len(rec):
            raise _Fail(EXIT_INDEX, f"snapshot index {ind} outside [0, {len(rec)})")
        if rec.snapshots.shape[1] != plan.n_modes:
            raise _Fail(EXIT_CONFIG, "guess bundle grid does not match the config mu_sim")
        guess = rec.snapshots[ind]
    elif args.soliton:
        try:
            guess = soliton_guess(plan, dw)
        except ValueError as exc:
            raise _Fail(EXIT_CONFIG, f"soliton guess: {exc}") from exc

    try:
        sol = solve_steady_state(plan, dw, initial_guess=guess)
    except SingularJacobian as exc:
        raise _Fail(EXIT_NO_CONVERGENCE, f"Newton failed: {exc}") from exc
    try:
        save_results(sol, args.out, config=cfg)
    except IoFailure as exc:
        raise _Fail(EXIT_IO, str(exc)) from exc
    _err(f"residual {sol.residual_norm:.3e} after {sol.iterations} iterations "
         f"({'converged' if sol.converged else 'NOT converged'})")
    print(args.out)
    return EXIT_OK if sol.converged else EXIT_NO_CONVERGENCE


def _load_bundle(path):
    try:
        return load_results(path)
    except FileNotFoundError as exc:
        raise _Fail(EXIT_BUNDLE, f"bundle not found: {path}") from exc
    except BundleError as exc:
        raise _Fail(EXIT_BUNDLE, f"bundle error: {exc}") from exc


def cmd_export(args):
    res = _load_bundle(args.bundle)
    temporal = isinstance(res, EvolutionRecord)
    if args.what == "combpower":
        if not temporal:
            raise _Fail(EXIT_CONFIG, "combpower needs a temporal bundle")
        norm = analysis.comb_power(res)
        rows = zip(res.steps.tolist(), norm.tolist(), res.detuning_trace.tolist())
        _write_csv(args.out, ["step", "comb_power_norm", "detuning_rads"], rows)
        print(args.out)
        return EXIT_OK

    if temporal:
        if args.ind is None:
            raise _Fail(EXIT_CONFIG, f"--ind is required for --what {args.what} on a temporal bundle")
        try:
            if args.what == "spectra":
                spec = analysis.spectrum_at(res, args.ind)
            else:
                tau, intensity = analysis.soliton_time(res, args.ind)
        except IndexOutOfRange as exc:
            raise _Fail(EXIT_INDEX, str(exc)) from exc
    else:
        if args.what == "spectra":
            spec = analysis.spectrum(res.modal, res.plan)
        else:
            env = modal_to_envelope(res.plan, res.modal)
            tau, intensity = res.plan.tau_grid, np.abs(env) ** 2

    if args.what == "spectra":
        rows = zip(spec.freq.tolist(), spec.s_ring.tolist(), spec.s_wg.tolist())
        _write_csv(args.out, ["freq_hz", "s_ring_dbm", "s_wg_dbm"], rows)
    else:
        _write_csv(args.out, ["tau_s", "intensity_w"], zip(tau.tolist(), intensity.tolist()))
    print(args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="combsim", description="Kerr microresonator comb simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="fit and export the integrated dispersion")
    a.add_argument("config")
    a.add_argument("-o", "--out", required=True)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("solve", help="run the detuning scan")
    s.add_argument("config")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--seed", type=int, default=None, help="override the noise seed")
    s.add_argument("-q", "--quiet", action="store_true", help="no progress bar")
    s.set_defaults(func=cmd_solve)

    st = sub.add_parser("steady", help="Newton steady state at a fixed detuning")
    st.add_argument("config")
    st.add_argument("-o", "--out", required=True)
    st.add_argument("--detuning", type=parse_detuning, default=None,
                    help="rad/s, or Hz with a trailing 'hz' (e.g. -5e9hz)")
    g = st.add_mutually_exclusive_group()
    g.add_argument("--guess", help="temporal bundle whose snapshot seeds Newton")
    g.add_argument("--soliton", action="store_true", help="start from a single-soliton ansatz")
    st.add_argument("--ind", type=int, default=None, help="snapshot index in --guess (default: last)")
    st.set_defaults(func=cmd_steady)

    e = sub.add_parser("export", help="write plot-ready CSV from a bundle")
    e.add_argument("bundle")
    e.add_argument("--what", choices=("spectra", "combpower", "time"), required=True)
    e.add_argument("--ind", type=int, default=None)
    e.add_argument("-o", "--out", required=True)
    e.set_defaults(func=cmd_export)
    return p


def _join_detuning(argv):
    # argparse would read "--detuning -5e9hz" as two options
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--detuning":
            out[i : i + 2] = [f"--detuning={out[i + 1]}"]
            break
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_detuning(argv))
    try:
        return args.func(args)
    except _Fail as exc:
        _err(f"error: {exc}")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
