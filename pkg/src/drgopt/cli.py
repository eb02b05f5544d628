"""Command-line driver: ``drgopt {rayleigh,brockett,insar,dti,verify}``.

Every run subcommand writes into ``--out``:

``log.csv``       one row per sweep (``wall_ms`` is ``nan`` unless ``--wall-clock``)
``manifest.txt``  the full configuration plus stop reason and iteration count
``report.txt``    oracle comparisons and fitted rates

Exit codes: 0 success, 1 bad configuration or input file, 2 runtime failure
(including a failed dissipation audit), ``2 + n`` for ``n`` failed
verification properties (capped at 100).
"""

import argparse
import os
import sys

import numpy as np

from . import experiments as ex
from .engine import StepSchedule, dissipation_audit
from .errors import DrgError, ParseError
from .imaging import (NoiseSpec, load_pgm_phase, load_phase, load_spd, save_phase, save_spd,
                      synth_phase, synth_spd)
from .problems import TVConfig
from .verify import format_table, run_suites

EXIT_CONFIG = 1
EXIT_RUNTIME = 2
MAX_FAILED = 100


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write(out, name, text):
    with open(os.path.join(out, name), "w") as fh:
        fh.write(text)


def _manifest(args, extra):
    lines = [f"subcommand = {args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "func"):
            continue
        lines.append(f"{key} = {_fmt(getattr(args, key))}")
    lines += [f"{k} = {_fmt(v)}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def _report(items):
    return "\n".join(f"{k}: {_fmt(v)}" for k, v in items.items()) + "\n"


def _finish(args, exp, report, extra=None):
    """Write the common outputs and return the exit code."""
    res = exp.result
    res.log.to_csv(os.path.join(args.out, "log.csv"), wall_clock=args.wall_clock)
    ok, bad = dissipation_audit(res.log)
    report = dict(report)
    report["dissipation_audit"] = "pass" if ok else f"FAIL at k={bad.k}"
    report["telescoping_gap"] = res.log.telescoping_gap()
    info = {"stop_reason": res.stop_reason, "iterations": res.iterations}
    info.update(extra or {})
    _write(args.out, "manifest.txt", _manifest(args, info))
    _write(args.out, "report.txt", _report(report))
    print(_report(report), end="")
    if not ok:
        print(f"error: energy increased at iteration {bad.k}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


def _schedule(text):
    try:
        return StepSchedule.parse(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad schedule {text!r}: {exc}") from None


def _tv_config(args):
    try:
        return TVConfig(args.lam, args.beta, args.gamma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---- subcommands ---------------------------------------------------------

def cmd_rayleigh(args):
    if args.matrix:
        try:
            A = np.loadtxt(args.matrix, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read matrix: {exc}") from None
    else:
        if args.m is None or args.m < 2:
            raise ConfigError("--m must be at least 2")
        A = ex.random_symmetric(args.m, np.random.default_rng(args.seed))
    if A.shape[0] < 2 or A.shape[0] != A.shape[1]:
        raise ConfigError("matrix must be square with m >= 2")
    if args.tau <= 0:
        raise ConfigError("--tau must be positive")
    try:
        exp = ex.rayleigh_experiment(A, args.tau, args.tol, args.iters, args.init,
                                     np.random.default_rng(args.seed + 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    s = exp.stats
    report = {"final_V": s["final_V"], "lambda_min": s["lambda_min"], "gap": s["gap"],
              "within_1e-8": abs(s["gap"]) <= 1e-8,
              "converged_iteration": s["converged_iteration"],
              "theta": " ".join(_fmt(t) for t in exp.result.point)}
    return _finish(args, exp, report)


def cmd_brockett(args):
    if args.m < 2:
        raise ConfigError("--m must be at least 2")
    if args.tau <= 0:
        raise ConfigError("--tau must be positive")
    A, Q0 = ex.brockett_setup(args.m, args.seed)
    exp = ex.brockett_experiment(A, Q0, args.tau, args.retraction, args.iters)
    diag = exp.series["diag"]
    errors = exp.series["errors"]
    rows = ["k,opt_error," + ",".join(f"d{i + 1}" for i in range(args.m))]
    for k, (e, d) in enumerate(zip(errors, diag)):
        rows.append(f"{k},{float(e)!r}," + ",".join(repr(float(x)) for x in d))
    _write(args.out, "diag.csv", "\n".join(rows) + "\n")
    s = exp.stats
    report = {"V_star": s["V_star"], "final_V": s["final_V"], "diag_error": s["diag_error"],
              "tail_slope": s["tail_slope"], "tail_r2": s["tail_r2"],
              "spectrum": " ".join(_fmt(x) for x in exp.series["spectrum"])}
    return _finish(args, exp, report)


def _image_input(args, kind):
    if args.input:
        try:
            return load_phase(args.input) if kind == "phase" else load_spd(args.input)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.input}: {exc}") from None
    if kind == "phase" and args.pgm:
        try:
            return load_pgm_phase(args.pgm)
        except ImportError:
            raise ConfigError("reading PGM files needs Pillow (install the 'pgm' extra)") from None
        except OSError as exc:
            raise ConfigError(f"cannot read {args.pgm}: {exc}") from None
    l, m, sigma, seed = args.synthetic
    try:
        dims = (int(l), int(m))
        if kind == "phase":
            noise = NoiseSpec("wrapped-gaussian", float(sigma), int(seed))
            return synth_phase(dims, args.pattern, noise)[1]
        noise = NoiseSpec("tangent-gaussian", float(sigma), int(seed))
        return synth_spd(dims, args.pattern, noise)[1]
    except ValueError as exc:
        raise ConfigError(f"bad --synthetic arguments: {exc}") from None


def cmd_insar(args):
    config = _tv_config(args)
    schedule = _schedule(args.schedule)
    noisy = _image_input(args, "phase")
    exp = ex.insar_experiment(noisy, config, schedule, args.iters, args.vstar_iters,
                              mode="colored" if args.parallel else "sequential")
    save_phase(os.path.join(args.out, "result.pphase"), exp.result.point)
    s = exp.stats
    report = {"final_V": exp.result.log.final_value, "V_star": s["V_star"],
              "V_star_iters": s["V_star_iters"], "tail_slope": s["tail_slope"],
              "monotone": s["monotone"], "strict_decrease": s["strict_decrease"]}
    return _finish(args, exp, report)


def cmd_dti(args):
    config = _tv_config(args)
    schedule = _schedule(args.schedule)
    noisy = _image_input(args, "spd")
    mode = "colored" if args.parallel else "sequential"
    exp = ex.dti_experiment(noisy, config, schedule, args.stop_rel, args.iters, mode)
    save_spd(os.path.join(args.out, "result.pspd3"), exp.result.point)
    s = exp.stats
    report = {"final_V": s["final_V"], "iterations_to_stop": s["iterations"],
              "stop_reason": s["stop_reason"], "all_spd": s["all_spd"]}
    if args.compare:
        for name, e in ex.dti_compare(noisy, config, args.stop_rel, args.iters, mode).items():
            report[f"compare_{name}"] = f"{e.stats['iterations']} ({e.stats['stop_reason']})"
    return _finish(args, exp, report)


def cmd_verify(args):
    if args.trials < 0:
        raise ConfigError("--trials must be non-negative")
    checks = run_suites(args.suite, args.trials, args.seed)
    if checks:
        print(format_table(checks))
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed} passed, {failed} failed")
    return 0 if failed == 0 else EXIT_RUNTIME + min(failed, MAX_FAILED)


# ---- parser --------------------------------------------------------------

def _common(p, out=True):
    if out:
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        p.add_argument("--wall-clock", action="store_true",
                       help="record sweep wall times in log.csv (breaks byte reproducibility)")


def _image_args(p, lam, schedule, pattern, phase):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="phase (P_PHASE) or tensor (P_SPD3) text file")
    if phase:
        src.add_argument("--pgm", help="8-bit binary PGM mapped onto (-pi, pi]")
    src.add_argument("--synthetic", nargs=4, metavar=("L", "M", "SIGMA", "SEED"),
                     help="synthetic image of size L x M with noise level SIGMA")
    p.add_argument("--pattern", default=pattern)
    p.add_argument("--lambda", dest="lam", type=float, default=lam)
    p.add_argument("--beta", type=int, default=2)
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--schedule", default=schedule,
                   help="constant:T, halving:T0:PERIOD or piecewise:K0=T0,K1=T1,...")
    p.add_argument("--parallel", action="store_true",
                   help="checkerboard (colored) sweeps instead of sequential ones")


def build_parser():
    parser = _Parser(prog="drgopt", description="Discrete Riemannian gradient optimiser.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rayleigh", help="smallest eigenvalue via the Rayleigh quotient")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--matrix", help="whitespace-separated symmetric matrix")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-14, help="relative energy-change stop")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--init", choices=("random", "e1"), default="random")
    _common(p)
    p.set_defaults(func=cmd_rayleigh)

    p = sub.add_parser("brockett", help="diagonalise a random symmetric matrix on SO(m)")
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--retraction", choices=("cayley", "exp"), default="cayley")
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_brockett)

    p = sub.add_parser("insar", help="TV denoising of a phase image")
    _image_args(p, 0.3, "constant:0.002", "ramp", phase=True)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--vstar-iters", type=int, default=1500,
                   help="sweeps used to estimate the optimal energy for the tail slope")
    _common(p)
    p.set_defaults(func=cmd_insar)

    p = sub.add_parser("dti", help="TV denoising of an SPD(3) tensor field")
    _image_args(p, 0.05, "piecewise:0=0.05,12=0.01", "two-region", phase=False)
    p.add_argument("--stop-rel", type=float, default=1e-5)
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--compare", action="store_true",
                   help="also report iterations to stop for the three reference schedules")
    _common(p)
    p.set_defaults(func=cmd_dti)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", choices=("geometry", "drg", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "out"):
            os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DrgError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
