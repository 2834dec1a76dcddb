"""Experiment command line.

Four subcommands: `deblur-gauss` and `deblur-sp` run the two imaging
models and write the recovered image (PGM plus exact float sidecar) and
a per-iteration history CSV; `synth-bench` checks every published gap
guarantee on seeded dense instances; `rates` fits log-log slopes to the
measured gap histories and compares them against the expected decay.

Exit codes: 0 success, 2 bad configuration, 3 file I/O failure,
4 divergence or numerical failure, 5 a guarantee or rate check failed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import edpd, ldpd
from .bench import make_ball_capped_saddle, make_quadratic_saddle
from .diagnostics import (
    GapReference,
    HistoryRecorder,
    fit_loglog_slope,
    read_history_csv,
    snr_db,
    theoretical_bound,
    write_history_csv,
)
from .errors import (
    ConfigurationError,
    ContractViolationError,
    DivergenceError,
    NumericalFailureError,
)
from .imaging import (
    GaussianDeblurSpec,
    SaltPepperDeblurSpec,
    add_gaussian_noise,
    add_salt_pepper,
    build_gaussian_problem,
    build_saltpepper_problem,
    continuation_mu_g,
    make_phantom,
    read_dpdf,
    read_pgm,
    write_dpdf,
    write_pgm,
)
from .linops import ImageGrid, make_average_kernel, make_convolution_operator, make_motion_kernel
from .model import SolverConsts

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4
EXIT_VIOLATION = 5

CONTINUATION_LABEL = "heuristic continuation"


def _read_image(path) -> ImageGrid:
    if str(path).endswith(".dpdf"):
        return read_dpdf(path)
    return read_pgm(path)


def _parse_motion(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigurationError(
            f"expected LENGTH,THETA for the motion kernel, got {text!r}"
        )
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigurationError(f"bad motion kernel spec {text!r}") from exc


def _load_scene(args):
    """Resolve (clean, observed, degraded_here) from the input flags."""
    clean = _read_image(args.input) if args.input else None
    if args.degraded_input:
        return clean, _read_image(args.degraded_input), False
    if clean is None:
        clean = make_phantom(args.size, args.size)
    return clean, None, True


def _write_run_outputs(out_dir, recovered: ImageGrid, records, label=None,
                       degraded: ImageGrid | None = None):
    os.makedirs(out_dir, exist_ok=True)
    write_pgm(os.path.join(out_dir, "recovered.pgm"), recovered)
    write_dpdf(os.path.join(out_dir, "recovered.dpdf"), recovered)
    write_history_csv(os.path.join(out_dir, "history.csv"), records, label=label)
    if degraded is not None:
        write_pgm(os.path.join(out_dir, "degraded.pgm"), degraded)
        write_dpdf(os.path.join(out_dir, "degraded.dpdf"), degraded)


def cmd_deblur_gauss(args) -> int:
    """Quadratic-fit deblurring run."""
    length, theta = _parse_motion(args.kernel)
    kernel = make_motion_kernel(length, theta)
    clean, observed, degraded_here = _load_scene(args)
    if degraded_here:
        K = make_convolution_operator(kernel, clean.m, clean.n)
        blurred = ImageGrid(clean.m, clean.n, K.apply(clean.data))
        observed = add_gaussian_noise(blurred, args.sigma, args.seed)
    problem = build_gaussian_problem(
        GaussianDeblurSpec(observed=observed, kernel=kernel,
                           mu=args.mu, mu_g=args.mu_g))

    norm_A = problem.A.norm_bound
    if args.solver == "ldpd":
        regime = _ldpd_regime(args.regime, args.iters, args.tau, args.mu_g)
    else:
        regime = _edpd_regime(args.regime, args.tau, norm_A)

    recorder = HistoryRecorder(x_true=clean, timing=args.timing)
    x1 = np.zeros(problem.primal_dim)
    y1 = np.zeros(problem.dual_dim)
    if args.solver == "ldpd":
        result = ldpd.run_ldpd(problem, regime, x1, y1, args.iters, recorder)
    else:
        result = edpd.run_edpd(problem, regime, x1, y1, args.iters, recorder)

    recovered = ImageGrid(observed.m, observed.n, result.x)
    _write_run_outputs(args.out_dir, recovered, recorder.records,
                       degraded=observed if degraded_here else None)
    if clean is not None:
        print(f"final snr_db: {snr_db(result.x, clean.data):.4f}")
    print(f"wrote recovered image and history to {args.out_dir}")
    return EXIT_OK


def cmd_deblur_sp(args) -> int:
    """L1-fit deblurring run with optional smoothing continuation."""
    kernel = make_average_kernel(args.kernel)
    clean, observed, degraded_here = _load_scene(args)
    if degraded_here:
        K = make_convolution_operator(kernel, clean.m, clean.n)
        blurred = ImageGrid(clean.m, clean.n, K.apply(clean.data))
        observed = add_salt_pepper(blurred, args.fraction, args.seed)
    spec = SaltPepperDeblurSpec(observed=observed, kernel=kernel,
                                alpha=args.alpha, mu_g0=args.mu_g0,
                                halve_every=args.halve_every)
    problem = build_saltpepper_problem(spec)

    before_step = None
    label = None
    if spec.mu_g0 > 0.0:
        regime = edpd.EdpdRegime(edpd.STRONGLY_CONVEX_DUAL)
        if spec.halve_every > 0:
            label = CONTINUATION_LABEL

            def before_step(t, prob):
                prob.g.mu_g = continuation_mu_g(t, spec.mu_g0, spec.halve_every)

    else:
        tau = args.tau if args.tau is not None else 1.0 / problem.A.norm_bound
        regime = edpd.EdpdRegime(edpd.WEAKLY_CONVEX, tau=tau)

    recorder = HistoryRecorder(x_true=clean, timing=args.timing)
    x1 = np.zeros(problem.primal_dim)
    y1 = np.zeros(problem.dual_dim)
    result = edpd.run_edpd(problem, regime, x1, y1, args.iters, recorder,
                           before_step=before_step)

    recovered = ImageGrid(observed.m, observed.n, result.x)
    _write_run_outputs(args.out_dir, recovered, recorder.records, label=label,
                       degraded=observed if degraded_here else None)
    if label:
        print(f"mode: {label} (guarantee column left empty)")
    if clean is not None:
        print(f"final snr_db: {snr_db(result.x, clean.data):.4f}")
    print(f"wrote recovered image and history to {args.out_dir}")
    return EXIT_OK


def _ldpd_regime(name: str, iters: int, tau, mu_g: float) -> ldpd.LdpdRegime:
    if name == ldpd.WEAKLY_CONVEX:
        return ldpd.LdpdRegime(name, horizon=iters)
    if name == ldpd.SINGLE_STEP:
        if tau is None:
            if not mu_g > 0.0:
                raise ConfigurationError(
                    "single-step needs --tau when mu_g is zero"
                )
            tau = 3.0 / mu_g
        return ldpd.LdpdRegime(name, tau=tau)
    return ldpd.LdpdRegime(name)


def _edpd_regime(name: str, tau, norm_A: float) -> edpd.EdpdRegime:
    if name == edpd.WEAKLY_CONVEX:
        return edpd.EdpdRegime(name, tau=tau if tau is not None else 1.0 / norm_A)
    return edpd.EdpdRegime(name)


def _bench_instances(args):
    try:
        n_primal, n_dual = (int(v) for v in args.dims.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad --dims {args.dims!r}, expected N,M") from exc
    wide_rows = max(2, (3 * n_primal) // 5)
    strong = make_quadratic_saddle(n_primal, n_dual, seed=args.seed,
                                   mu_g=0.5, lam=1.0)
    weak = make_quadratic_saddle(n_primal, n_dual, seed=args.seed,
                                 mu_g=0.5, lam=0.0, c_rows=wide_rows)
    # Constant-step runs are measured on an instance whose dual solution
    # sits on a binding ball, where the averaged gap genuinely decays
    # like 1/k instead of collapsing quadratically.
    capped = make_ball_capped_saddle(n_primal, n_dual, seed=args.seed,
                                     mu_g=0.05, lam=0.0, c_rows=wide_rows)
    return strong, weak, capped


def _bench_runs(strong, weak, capped, iters):
    """The seven regime runs: (tag, instance, solver, regime, free tau)."""
    tau_w = 1.0 / capped.problem.A.norm_bound
    return [
        ("ldpd-weakly-convex", weak, "ldpd",
         ldpd.LdpdRegime(ldpd.WEAKLY_CONVEX, horizon=iters), None),
        ("ldpd-strongly-convex-dual", weak, "ldpd",
         ldpd.LdpdRegime(ldpd.STRONGLY_CONVEX_DUAL), None),
        ("ldpd-strongly-convex-primal", strong, "ldpd",
         ldpd.LdpdRegime(ldpd.STRONGLY_CONVEX_PRIMAL), None),
        ("ldpd-single-step", weak, "ldpd",
         ldpd.LdpdRegime(ldpd.SINGLE_STEP, tau=tau_w), tau_w),
        ("edpd-strongly-convex-primal", strong, "edpd",
         edpd.EdpdRegime(edpd.STRONGLY_CONVEX_PRIMAL), None),
        ("edpd-strongly-convex-dual", weak, "edpd",
         edpd.EdpdRegime(edpd.STRONGLY_CONVEX_DUAL), None),
        ("edpd-weakly-convex", capped, "edpd",
         edpd.EdpdRegime(edpd.WEAKLY_CONVEX, tau=tau_w), tau_w),
    ]


def _run_bench_case(tag, instance, solver, regime, free_tau, iters):
    problem = instance.problem
    consts = SolverConsts.from_problem(problem)
    dx2, dy2 = instance.initial_distances()
    horizon = iters if tag == "ldpd-weakly-convex" else None

    def bound_fn(k):
        if horizon is not None and k != horizon:
            return None
        return theoretical_bound(tag, k, consts, dx2, dy2,
                                 tau=free_tau, horizon=horizon)

    recorder = HistoryRecorder(
        problem=problem,
        ref=GapReference(instance.x_star, instance.y_star),
        bound_fn=bound_fn,
        y_star=instance.y_star,
    )
    x1 = np.zeros(problem.primal_dim)
    y1 = np.zeros(problem.dual_dim)
    if solver == "ldpd":
        ldpd.run_ldpd(problem, regime, x1, y1, iters, recorder)
    else:
        edpd.run_edpd(problem, regime, x1, y1, iters, recorder)
    return recorder


def cmd_synth_bench(args) -> int:
    """Run every regime on certified dense instances and check the bounds."""
    strong, weak, capped = _bench_instances(args)
    os.makedirs(args.out_dir, exist_ok=True)
    violations = []
    print(f"{'regime':32s} {'final gap':>13s} {'final bound':>13s} {'slope':>8s}")
    for tag, inst, solver, regime, free_tau in _bench_runs(strong, weak, capped,
                                                           args.iters):
        recorder = _run_bench_case(tag, inst, solver, regime, free_tau, args.iters)
        write_history_csv(os.path.join(args.out_dir, f"{tag}.csv"),
                          recorder.records)
        for rec in recorder.records:
            if rec.bound is not None and rec.gap > rec.bound + 1e-9:
                violations.append((tag, rec.t))
        gaps = recorder.series("gap")
        slope = fit_loglog_slope(gaps, k_min=max(10, args.iters // 10)) \
            if len(gaps) >= 20 else float("nan")
        final = recorder.records[-1]
        bound_txt = f"{final.bound:13.5e}" if final.bound is not None else " " * 13
        print(f"{tag:32s} {final.gap:13.5e} {bound_txt} {slope:8.3f}")
    if violations:
        for tag, t in violations[:10]:
            print(f"guarantee violated: {tag} at k={t}", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"all guarantees hold; histories in {args.out_dir}")
    return EXIT_OK


RATE_WINDOWS = {
    "ldpd-strongly-convex-dual": (None, -1.8),
    "edpd-strongly-convex-dual": (None, -1.8),
    "edpd-weakly-convex": (-1.3, -0.7),
}


def cmd_rates(args) -> int:
    """Fit gap decay slopes and compare them with the expected windows."""
    series = {}
    if args.from_dir:
        for tag in RATE_WINDOWS:
            path = os.path.join(args.from_dir, f"{tag}.csv")
            records = read_history_csv(path)
            series[tag] = [(r.t, r.gap) for r in records if r.gap is not None]
    else:
        strong, weak, capped = _bench_instances(args)
        for tag, inst, solver, regime, free_tau in _bench_runs(strong, weak,
                                                               capped,
                                                               args.iters):
            if tag not in RATE_WINDOWS:
                continue
            recorder = _run_bench_case(tag, inst, solver, regime, free_tau,
                                       args.iters)
            series[tag] = recorder.series("gap")
    failed = []
    for tag, (lo, hi) in RATE_WINDOWS.items():
        slope = fit_loglog_slope(series[tag], k_min=args.k_min)
        ok = (lo is None or slope >= lo) and slope <= hi
        window = f"[{lo}, {hi}]" if lo is not None else f"<= {hi}"
        print(f"{tag:32s} slope {slope:8.3f}  expected {window:16s} "
              f"{'ok' if ok else 'FAIL'}")
        if not ok:
            failed.append(tag)
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpdsolve",
        description="Primal-dual saddle point solvers and deblurring experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_io(p):
        p.add_argument("--input", help="clean input image (PGM or DPDF)")
        p.add_argument("--degraded-input",
                       help="already degraded image; skips degradation")
        p.add_argument("--size", type=int, default=64,
                       help="phantom side length when no input is given")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--iters", type=int, required=False)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock per iteration "
                            "(makes the CSV nondeterministic)")

    pg = sub.add_parser("deblur-gauss",
                        help="quadratic-fit deblurring (Gaussian noise)")
    add_common_io(pg)
    pg.set_defaults(iters=200)
    pg.add_argument("--mu", type=float, default=3000.0)
    pg.add_argument("--mu-g", type=float, default=0.01)
    pg.add_argument("--kernel", default="30,135",
                    help="motion kernel as LENGTH,THETA")
    pg.add_argument("--sigma", type=float, default=3e-3)
    pg.add_argument("--solver", choices=["ldpd", "edpd"], default="ldpd")
    pg.add_argument("--regime", default="strongly-convex-dual",
                    choices=["weakly-convex", "strongly-convex-dual",
                             "strongly-convex-primal", "single-step"])
    pg.add_argument("--tau", type=float, default=None,
                    help="free dual step for single-step / weakly convex "
                         "proximal regimes")
    pg.set_defaults(func=cmd_deblur_gauss)

    ps = sub.add_parser("deblur-sp",
                        help="L1-fit deblurring (salt-and-pepper noise)")
    add_common_io(ps)
    ps.set_defaults(iters=150)
    ps.add_argument("--alpha", type=float, default=4.0)
    ps.add_argument("--mu-g0", type=float, default=0.03)
    ps.add_argument("--halve-every", type=int, default=10)
    ps.add_argument("--kernel", type=int, default=5,
                    help="odd size of the averaging blur kernel")
    ps.add_argument("--fraction", type=float, default=0.2)
    ps.add_argument("--tau", type=float, default=None,
                    help="dual step when mu_g0 is zero")
    ps.set_defaults(func=cmd_deblur_sp)

    pb = sub.add_parser("synth-bench",
                        help="check every gap guarantee on dense instances")
    pb.add_argument("--dims", default="20,15", help="primal,dual dimensions")
    pb.add_argument("--seed", type=int, default=42)
    pb.add_argument("--iters", type=int, default=500)
    pb.add_argument("--out-dir", default="synth-bench-out")
    pb.set_defaults(func=cmd_synth_bench)

    pr = sub.add_parser("rates", help="fit and check gap decay slopes")
    pr.add_argument("--from-dir",
                    help="read synth-bench CSVs instead of running inline")
    pr.add_argument("--dims", default="20,15")
    pr.add_argument("--seed", type=int, default=42)
    pr.add_argument("--iters", type=int, default=500)
    pr.add_argument("--k-min", type=int, default=50)
    pr.set_defaults(func=cmd_rates)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ContractViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DivergenceError, NumericalFailureError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
