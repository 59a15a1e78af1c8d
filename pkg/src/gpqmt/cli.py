"""Command-line interface: ``gpqmt {points,transform,polar,ungm,reentry}``.

Every subcommand writes CSV (one header row, 12 significant digits).  Output
goes to ``--output``; without it, to ``$GPQMT_OUTPUT_DIR/<name>.csv`` when
that variable is set, otherwise to stdout.  Settings can also come from a
``--config`` file of ``key = value`` lines (keys are long option names);
flags on the command line take precedence.

Exit codes: 0 success, 2 usage or parameter error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import csv
import math
import os
import sys

import numpy as np

from .classical import GaussianDensity, VectorFunction, classical_transform, mc_transform
from .errors import GpqError, NumericalError
from .gpq import GPQTransform, RbfKernelParams
from .sigma_points import make_rule
from .benchmarks import experiments as ex
from .benchmarks import models

OUTPUT_DIR_ENV = "GPQMT_OUTPUT_DIR"

PUB = "published setting"
OURS = "artifact default"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _h(text, tag):
    return f"{text} (default: %(default)s; {tag})"


def _floats(s):
    try:
        vals = tuple(float(v) for v in str(s).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


@contextlib.contextmanager
def _open_output(path, default_name):
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], default_name)
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _write_csv(path, default_name, header, rows):
    with _open_output(path, default_name) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    # the file has no section headers; parse it as one implicit section
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string("[gpqmt]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"bad config {path}: {exc.message.splitlines()[0]}") from None
    return {key.lstrip("-").replace("-", "_"): val for key, val in cp["gpqmt"].items()}


# ---------------------------------------------------------------------------
# subcommands


def _rule_options(p, dim_flag=True):
    p.add_argument("--rule", choices=["ut", "sut", "sr", "gh"], default="ut",
                   help="point set: unscented, scaled unscented, spherical-radial, Gauss-Hermite (default: %(default)s)")
    if dim_flag:
        p.add_argument("--dim", type=int, default=2, help="input dimension (default: %(default)s)")
    p.add_argument("--kappa", type=float, default=0.0, help=_h("UT spread parameter", PUB))
    p.add_argument("--order", type=int, default=3, help=_h("Gauss-Hermite order", OURS))
    p.add_argument("--alpha-ut", type=float, default=1.0, help=_h("scaled-UT alpha", PUB))
    p.add_argument("--beta-ut", type=float, default=2.0, help=_h("scaled-UT beta", PUB))


def _rule(args, dim):
    return make_rule(args.rule, dim, args.kappa, args.order, args.alpha_ut, args.beta_ut)


def cmd_points(args):
    rule = _rule(args, args.dim)
    header = ["index"] + [f"xi_{d + 1}" for d in range(rule.dim)] + ["w_mean", "w_cov"]
    rows = ([i, *rule.points[:, i], rule.mean_weights[i], rule.cov_weights[i]] for i in range(rule.n_points))
    _write_csv(args.output, "points.csv", header, rows)


_FUNCS = {
    "polar": (2, 2, lambda a: models.polar2cartesian),
    "ungm-dyn": (1, 1, lambda a: (lambda x: models.ungm_dynamics(x, a.step))),
    "ungm-obs": (1, 1, lambda a: models.ungm_observation),
    "reentry-dyn": (3, 3, lambda a: (lambda x: models.reentry_discrete_dynamics(x, 0.1))),
    "reentry-obs": (3, 1, lambda a: models.reentry_range),
}


def cmd_transform(args):
    D, E, make = _FUNCS[args.function]
    g = VectorFunction(make(args), D, E, vectorized=True)
    mean = np.array(args.mean if args.mean is not None else (1.0, 0.0)[:D] + (0.0,) * max(D - 2, 0))
    cov = np.array(args.cov if args.cov is not None else (0.25, math.radians(6.0) ** 2)[:D] + (1.0,) * max(D - 2, 0))
    if mean.size != D:
        raise UsageError(f"--mean needs {D} values for {args.function}")
    if cov.size == D:
        cov = np.diag(cov)
    elif cov.size == D * D:
        cov = cov.reshape(D, D)
    else:
        raise UsageError(f"--cov needs {D} (diagonal) or {D * D} values for {args.function}")
    density = GaussianDensity(mean, cov)
    if args.method == "mc":
        res = mc_transform(g, density, args.samples, args.seed)
    else:
        rule = _rule(args, D)
        if args.method == "gpq":
            ell = args.lengthscale if args.lengthscale is not None else ((60.0, 6.0) if args.function == "polar" else (1.0,))
            res = GPQTransform(rule, RbfKernelParams(args.alpha, ell))(g, density)
        else:
            res = classical_transform(g, density, rule)
    rows = [("mean", i, 0, v) for i, v in enumerate(res.out_mean)]
    rows += [("cov", i, j, res.out_cov[i, j]) for i in range(E) for j in range(E)]
    rows += [("cross_cov", i, j, res.cross_cov[i, j]) for i in range(D) for j in range(E)]
    if "sigma_bar_sq" in res.extra:
        rows.append(("sigma_bar_sq", 0, 0, res.extra["sigma_bar_sq"]))
    _write_csv(args.output, "transform.csv", ["quantity", "i", "j", "value"], rows)


def cmd_polar(args):
    cfg = ex.PolarConfig(
        sigma_r=args.sigma_r,
        sigma_theta_deg=(args.sigma_theta_min, args.sigma_theta_max),
        lengthscales=args.lengthscale,
        alpha=args.alpha,
        mc_samples=args.mc_samples,
        seed=args.seed,
    )
    res = ex.polar_experiment(cfg)
    _write_csv(args.output, "polar.csv", ["position_index", "sigma_theta_deg", "transform", "skl"], res.rows())
    for t, name in enumerate(res.transforms):
        print(f"{name}: mean SKL {res.skl[..., t].mean():.6g}", file=sys.stderr)


def _report(name, res, args):
    _write_csv(args.output, f"{name}_metrics.csv", ["run", "filter", "rmse", "nll", "nci"], res.metric_rows())
    curves = args.curves
    if curves is None and os.environ.get(OUTPUT_DIR_ENV):
        curves = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{name}_curves.csv")
    if curves is not None:
        _write_csv(curves, f"{name}_curves.csv", ["t", "filter", "component", "rmse", "nu"], res.curve_rows())
    for s in res.summaries.values():
        print(
            f"{s.name}: RMSE {s.rmse[0]:.4g} +/- {s.rmse[1]:.2g}  NLL {s.nll[0]:.4g} +/- {s.nll[1]:.2g}  "
            f"nu {s.nci[0]:.4g} +/- {s.nci[1]:.2g}",
            file=sys.stderr,
        )


def _runs(args, desk):
    if args.runs is not None:
        return args.runs
    return 100 if args.full_scale else desk


def cmd_ungm(args):
    cfg = models.UngmConfig(steps=args.steps, n_runs=_runs(args, 25), seed=args.seed, obs_lag=args.obs_lag)
    specs = ex.UNGM_FILTERS if args.filters is None else ex.select_filters(args.filters.split(","), ex.UNGM_FILTERS)
    res = ex.ungm_benchmark(cfg, specs, jobs=args.jobs, n_resamples=args.bootstrap)
    _report("ungm", res, args)


def cmd_reentry(args):
    cfg = models.ReentryConfig(
        dt=args.dt, duration=args.duration, process_noise_var=args.q_diag,
        n_runs=_runs(args, 20), seed=args.seed,
    )
    res = ex.reentry_benchmark(cfg, jobs=args.jobs, n_resamples=args.bootstrap)
    _report("reentry", res, args)


def _common(p):
    p.add_argument("--config", metavar="PATH", help="key = value settings file; flags override it")
    p.add_argument("--output", "-o", metavar="PATH", help=f"CSV destination ('-' for stdout; default ${OUTPUT_DIR_ENV} or stdout)")


def _filter_common(p, desk_runs):
    p.add_argument("--runs", type=int, default=None, help=f"Monte Carlo runs (default: {desk_runs}; 100 with --full-scale)")
    p.add_argument("--full-scale", action="store_true", help="use the published 100 runs")
    p.add_argument("--seed", type=int, default=0, help=_h("master seed; run m uses SeedSequence([seed, m])", OURS))
    p.add_argument("--jobs", type=int, default=1, help=_h("worker processes for independent runs", OURS))
    p.add_argument("--bootstrap", type=int, default=1000, help=_h("bootstrap resamples", OURS))
    p.add_argument("--curves", metavar="PATH", help="also write per-step RMSE / inclination curves here")


def build_parser():
    p = _Parser(prog="gpqmt", description="GPQ and classical sigma-point moment transforms, filters and benchmarks.")
    sub = p.add_subparsers(dest="command", metavar="{points,transform,polar,ungm,reentry}")
    sub.required = True

    sp = sub.add_parser("points", help="print a unit sigma-point set", description="Unit sigma-points and weights as CSV.")
    _common(sp)
    _rule_options(sp)
    sp.set_defaults(handler=cmd_points)

    st = sub.add_parser("transform", help="transform one Gaussian through a benchmark nonlinearity",
                        description="Output mean, covariance and cross-covariance as (quantity, i, j, value) rows.")
    _common(st)
    st.add_argument("--func", dest="function", choices=sorted(_FUNCS), default="polar", help="nonlinearity (default: %(default)s)")
    st.add_argument("--method", choices=["quadrature", "gpq", "mc"], default="quadrature",
                    help="classical rule, GPQ on the rule's points, or Monte Carlo (default: %(default)s)")
    _rule_options(st, dim_flag=False)
    st.add_argument("--mean", type=_floats, default=None, help="input mean, comma separated (default: 1,0 for polar)")
    st.add_argument("--cov", type=_floats, default=None,
                    help="input covariance: D diagonal values or D*D row-major values (default: 0.25,(6 deg)^2 for polar)")
    st.add_argument("--alpha", type=float, default=1.0, help=_h("GPQ kernel scaling", PUB))
    st.add_argument("--lengthscale", type=_floats, default=None,
                    help="GPQ lengthscales, one value or one per dimension (default: 60,6 for polar [published setting], else 1)")
    st.add_argument("--step", type=int, default=1, help="time index k for ungm-dyn (default: %(default)s)")
    st.add_argument("--samples", type=int, default=10_000, help=_h("Monte Carlo samples", PUB))
    st.add_argument("--seed", type=int, default=0, help=_h("Monte Carlo seed", OURS))
    st.set_defaults(handler=cmd_transform)

    pp = sub.add_parser("polar", help="polar-to-Cartesian SKL study (SR vs GPQ-SR)",
                        description="SKL grid over 10 spiral positions x 10 azimuth deviations.")
    _common(pp)
    pp.add_argument("--sigma-r", type=float, default=0.5, help=_h("range standard deviation [m]", PUB))
    pp.add_argument("--sigma-theta-min", type=float, default=6.0, help=_h("smallest azimuth std [deg]", PUB))
    pp.add_argument("--sigma-theta-max", type=float, default=36.0, help=_h("largest azimuth std [deg]", PUB))
    pp.add_argument("--lengthscale", type=_floats, default=(60.0, 6.0), help=_h("GPQ lengthscales (range, azimuth)", PUB))
    pp.add_argument("--alpha", type=float, default=1.0, help=_h("GPQ kernel scaling", PUB))
    pp.add_argument("--mc-samples", type=int, default=10_000, help=_h("Monte Carlo truth samples", PUB))
    pp.add_argument("--seed", type=int, default=0, help=_h("Monte Carlo seed", OURS))
    pp.set_defaults(handler=cmd_polar)

    pu = sub.add_parser("ungm", help="UNGM filtering benchmark",
                        description="Classical vs GPQ sigma-point filters on the univariate non-stationary growth model. "
                                    "Kernel settings (alpha=1; l=3 UT, 0.3 SR/GH5, 0.1 higher GH) and UKF kappa=0 "
                                    "are the published ones.")
    _common(pu)
    _filter_common(pu, 25)
    pu.add_argument("--steps", type=int, default=500, help=_h("time steps per run", PUB))
    pu.add_argument("--filters", default=None,
                    help="comma-separated subset of: " + ", ".join(s.name for s in ex.UNGM_FILTERS) + " (default: all)")
    pu.add_argument("--obs-lag", action="store_true",
                    help="simulate measurements from the previous state, z_k = x_{k-1}^2/20 + r_k")
    pu.set_defaults(handler=cmd_ungm)

    pr = sub.add_parser("reentry", help="ballistic reentry tracking benchmark (UKF vs GPQKF-UT)",
                        description="Radar range tracking of a falling body. UKF: kappa=0, alpha=1, beta=2; "
                                    "GPQKF: alpha=0.5, l=[10,10,10] dynamics, l=[15,20,20] measurement "
                                    "(published settings).")
    _common(pr)
    _filter_common(pr, 20)
    pr.add_argument("--dt", type=float, default=0.1, help=_h("step size [s]", PUB))
    pr.add_argument("--duration", type=float, default=30.0, help=_h("simulated time [s]", PUB))
    pr.add_argument("--q-diag", type=_floats, default=(1e-10, 1e-10, 1e-8),
                    help=_h("filter process-noise variances (p, v, theta)", OURS))
    pr.set_defaults(handler=cmd_reentry)
    return p


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - dests - {"config"})
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for a in sub._actions:
            if a.dest in values and isinstance(a, argparse._StoreTrueAction):
                values[a.dest] = values[a.dest].lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**{k: v for k, v in values.items() if k != "config"})
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    try:
        args = _parse(sys.argv[1:] if argv is None else argv)
        args.handler(args)
    except UsageError as exc:
        print(f"gpqmt: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"gpqmt: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (GpqError, argparse.ArgumentTypeError) as exc:
        print(f"gpqmt: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return exc.code or 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
