"""``stochain`` command line: one subcommand per experiment, CSV output plus a
manifest.json per run. Exit codes: 0 ok, 1 config error, 2 numerical failure,
3 verification failure."""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import analytic, io, sde
from .analytic import Lemma2Variant, MomentRequest
from .chain import hat_block, original_block
from .config import (ConfigError, DomainError, NumericalError, config_from_dict, default_config,
                     load_config, validate_config)
from .ensemble import ensemble_endpoints, run_ensemble, stats_from_columns, endpoint_columns
from .estimators import (EstimatorError, compare_fields, estimate_char_function,
                         estimate_complex_moment, estimate_density, solve_phase_density)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
SIMULATORS = ("original", "hat", "sde-euler", "sde-exact", "sde-projected-euler")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", metavar="PATH", help="JSON model config (default: a = sigma = 1)")
    g.add_argument("--seed", type=int, metavar="U64", help="overrides config seed and STOCHAIN_SEED")
    g.add_argument("--trajectories", "-M", type=int, metavar="M")
    g.add_argument("--t", type=float, metavar="REAL", help="time parameter (default: config T)")
    g.add_argument("--kappa", type=float, metavar="REAL")
    g.add_argument("--variant", choices=[v.value for v in Lemma2Variant], default="oracle")
    g.add_argument("--workers", type=int, default=1, metavar="K")
    g.add_argument("--out", default="stochain-out", metavar="DIR")
    g.add_argument("--plot", action="store_true", help="also write SVG figures")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="stochain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("feller", parents=[common], help="Feller +-alpha chain vs its formula")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--alpha", type=float, default=math.pi / 3)

    p = sub.add_parser("simulate", parents=[common], help="endpoint ensemble of one simulator")
    p.add_argument("--which", choices=SIMULATORS, default="hat")
    p.add_argument("--h", type=float, help="SDE step (default: config delta)")
    p.add_argument("--paths", type=int, default=0, help="also record the first K full paths")

    p = sub.add_parser("moments", parents=[common], help="E[(x - iy)^m] by nested quadrature")
    p.add_argument("--m", type=int, nargs="+", default=[1, 2])
    p.add_argument("--l", type=float, help="chain length (default: n * delta)")
    p.add_argument("--mc", action="store_true", help="add hat-field Monte Carlo rows")

    p = sub.add_parser("msl", parents=[common], help="limit mean-square length by quadrature")
    p.add_argument("--l", type=float, nargs="+", help="chain lengths (default: n * delta)")

    p = sub.add_parser("cf", parents=[common], help="empirical characteristic function")
    p.add_argument("--which", choices=SIMULATORS, default="hat")
    p.add_argument("--axis", type=float, nargs="+", default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    p.add_argument("--h", type=float)

    p = sub.add_parser("density", parents=[common], help="endpoint KDE, or the phase density")
    p.add_argument("--which", choices=SIMULATORS, default="hat")
    p.add_argument("--points", type=int, default=129)
    p.add_argument("--bandwidth", type=float, nargs="+")
    p.add_argument("--h", type=float)
    p.add_argument("--phase", action="store_true", help="solve the phase diffusion equation instead")

    p = sub.add_parser("compare", parents=[common], help="z-test two ensembles on a CF grid")
    p.add_argument("--which", choices=SIMULATORS, nargs=2, default=["original", "hat"])
    p.add_argument("--inputs", nargs=2, metavar="CSV", help="compare two endpoints.csv files instead")
    p.add_argument("--axis", type=float, nargs="+", default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    p.add_argument("--threshold", type=float, default=4.0)

    p = sub.add_parser("verify", parents=[common], help="run the oracle checks")
    p.add_argument("--level", choices=["quick", "full"], default="quick")

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory (default: the recorded one)")
    return parser


def resolve_config(ns, env=None):
    env = os.environ if env is None else env
    if ns.config:
        cfg = load_config(ns.config, env=env)
    else:
        cfg = default_config(seed=int(env.get("STOCHAIN_SEED", 12345)))
    if ns.seed is not None:
        cfg = cfg.with_updates(seed=ns.seed)
    if ns.kappa is not None:
        cfg = cfg.with_updates(kappa=ns.kappa)
    return validate_config(cfg)


def _t(ns, cfg):
    t = cfg.T if ns.t is None else ns.t
    if not 0 <= t <= cfg.T:
        raise ConfigError([f"t: must lie in [0, T={cfg.T:g}]"])
    return t


def _M(ns, default):
    M = default if ns.trajectories is None else ns.trajectories
    if M < 100:
        raise ConfigError(["trajectories: need at least 100"])
    return M


def _icfg(ns, cfg, kind, t):
    if not kind.startswith("sde-"):
        return {}
    h = getattr(ns, "h", None) or cfg.delta
    return {"icfg": sde.IntegratorConfig(kind[4:], h=h, t=t)}


def _endpoints(ns, cfg, kind, t, M):
    return ensemble_endpoints(kind, cfg, t, M, ns.workers, **_icfg(ns, cfg, kind, t))


def cmd_feller(ns, cfg, out):
    M = _M(ns, 200_000)
    if ns.n < 1 or not 0 <= ns.alpha <= math.pi:
        raise ConfigError(["n must be >= 1 and alpha in [0, pi]"])
    st = run_ensemble("feller", M, cfg, n=ns.n, alpha=ns.alpha, workers=ns.workers)
    exact = analytic.feller_mean_square(ns.n, ns.alpha)
    mc, se = st.mean["L2"], st.stderr["L2"]
    z = (mc - exact) / se if se > 0 else 0.0
    if not all(map(math.isfinite, (mc, exact))):
        raise NumericalError("non-finite Feller estimate")
    files = [io.write_csv(out / "feller.csv", ("n", "alpha", "formula", "mc_mean", "stderr", "z", "M", "seed"),
                          [(ns.n, ns.alpha, exact, mc, se, z, M, cfg.seed)])]
    print(f"formula {exact:.10g}  MC {mc:.6g} +- {se:.3g}  z = {z:+.2f}  (M={M})")
    return EXIT_OK, files


def cmd_simulate(ns, cfg, out):
    t, M = _t(ns, cfg), _M(ns, 10_000)
    xy = _endpoints(ns, cfg, ns.which, t, M)
    st = stats_from_columns(endpoint_columns(xy), cfg.seed)
    files = [io.write_csv(out / "endpoints.csv", io.ENDPOINT_HEADER,
                          [(i, float(x), float(y)) for i, (x, y) in enumerate(xy)]),
             io.write_csv(out / "stats.csv", io.STATS_HEADER, st.rows())]
    for k in st.mean:
        print(f"{k:>3s}: {st.mean[k]:.6f} +- {st.stderr[k]:.2g}")
    if ns.paths > 0:
        trs = np.arange(min(ns.paths, M))
        rows, paths = [], []
        if ns.which.startswith("sde-"):
            res = sde.integrate_block(cfg, _icfg(ns, cfg, ns.which, t)["icfg"], trs, record=True)
            s = res.states
            for b, tr in enumerate(trs):
                rows += [(int(tr), float(l), *(float(s[k][b, j]) for k in ("x", "y", "p", "q", "defect")))
                         for j, l in enumerate(s["l"])]
                paths.append(argparse.Namespace(x=s["x"][b], y=s["y"][b]))
        else:
            block = original_block if ns.which == "original" else hat_block
            phi, x, y = block(cfg, t, trs, full=True)
            a = cfg.a(cfg.sites())
            for b, tr in enumerate(trs):
                rows += [(int(tr), float(l), float(x[b, j]), float(y[b, j]), float(a[j] * np.sin(phi[b, j])),
                          float(a[j] * np.cos(phi[b, j])), 0.0) for j, l in enumerate(cfg.sites())]
                paths.append(argparse.Namespace(x=np.r_[0.0, x[b]], y=np.r_[0.0, y[b]]))
        files.append(io.write_csv(out / "paths.csv", ("trajectory",) + io.PATH_HEADER, rows))
        if ns.plot:
            from .plotting import paths_plot
            files.append(paths_plot(paths, out / "paths.svg"))
    return EXIT_OK, files


def cmd_moments(ns, cfg, out):
    t = _t(ns, cfg)
    l = cfg.l_obs if ns.l is None else ns.l
    rows = []
    for m in ns.m:
        v = analytic.moment_pure(MomentRequest(m, l, t, cfg))
        rows.append(("moment", m, l, t, cfg.kappa, v, "nested-simpson"))
        print(f"E[(x - iy)^{m}] = {v:.12g}")
    lim = analytic.lemma2_rhs(1.0, cfg, 0.0, l, t, ns.variant)
    rows.append((f"lemma2_limit_{ns.variant}", "", l, t, cfg.kappa, lim, "closed-form"))
    if ns.mc:
        M = _M(ns, 50_000)
        xy = ensemble_endpoints("hat", cfg, t, M, ns.workers)
        for m in ns.m:
            est, (sr, si) = estimate_complex_moment(xy, m)
            rows += [("moment_mc_re", m, l, t, cfg.kappa, est.real, f"hat-field M={M}"),
                     ("moment_mc_re_stderr", m, l, t, cfg.kappa, sr, f"hat-field M={M}"),
                     ("moment_mc_im", m, l, t, cfg.kappa, est.imag, f"hat-field M={M}"),
                     ("moment_mc_im_stderr", m, l, t, cfg.kappa, si, f"hat-field M={M}")]
    return EXIT_OK, [io.write_csv(out / "moments.csv", io.ANALYTIC_HEADER, rows)]


def cmd_msl(ns, cfg, out):
    t = _t(ns, cfg)
    rows = []
    for l in ns.l or [cfg.l_obs]:
        v = analytic.mean_square_length(l, t, cfg)
        rows.append(("mean_square_length", "", l, t, cfg.kappa, v, "simpson-2d"))
        print(f"E[x^2 + y^2](l={l:g}, t={t:g}) = {v:.12g}")
    return EXIT_OK, [io.write_csv(out / "msl.csv", io.ANALYTIC_HEADER, rows)]


def cmd_cf(ns, cfg, out):
    t, M = _t(ns, cfg), _M(ns, 20_000)
    grid = [(a, b) for a in ns.axis for b in ns.axis]
    cf = estimate_char_function(_endpoints(ns, cfg, ns.which, t, M), grid)
    files = [io.write_csv(out / "cf.csv", io.CF_HEADER, cf.rows())]
    if ns.plot:
        from .plotting import cf_modulus
        files.append(cf_modulus(cf, out / "cf.svg", f"|CF| of the {ns.which} field"))
    return EXIT_OK, files


def cmd_density(ns, cfg, out):
    t = _t(ns, cfg)
    if ns.phase:
        pd = solve_phase_density(cfg, t)
        files = [io.write_csv(out / "phase_density.csv", ("phi", "density"),
                              zip(map(float, pd.phi), map(float, pd.density)))]
        print(f"mass {pd.mass:.12f}  variance {pd.variance:.6f}  L-inf to Gaussian {pd.linf_error:.2e}")
        if ns.plot:
            from .plotting import phase_density_plot
            files.append(phase_density_plot(pd, out / "phase_density.svg"))
        return EXIT_OK, files
    M = _M(ns, 20_000)
    bw = None if ns.bandwidth is None else (ns.bandwidth * 2)[:2]
    est = estimate_density(_endpoints(ns, cfg, ns.which, t, M), bandwidth=bw, points=ns.points)
    dens = [(float(x), float(y), float(est.rho[i, j])) for i, x in enumerate(est.xs)
            for j, y in enumerate(est.ys)]
    hist = [(float(x), float(y), int(est.hist[i, j])) for i, x in enumerate(est.xs)
            for j, y in enumerate(est.ys)]
    files = [io.write_csv(out / "density.csv", io.DENSITY_HEADER, dens),
             io.write_csv(out / "hist.csv", io.HIST_HEADER, hist)]
    print(f"bandwidth ({est.bandwidth[0]:.4g}, {est.bandwidth[1]:.4g})  mass {est.mass:.6f}  "
          f"mode {est.mode}")
    if ns.plot:
        from .plotting import density_heatmap
        files.append(density_heatmap(est, out / "density.svg", f"{ns.which} field, M={M}"))
    return EXIT_OK, files


def _read_endpoints(path):
    rows = io.read_csv(path)
    return np.array([[float(r["x"]), float(r["y"])] for r in rows])


def cmd_compare(ns, cfg, out):
    t = _t(ns, cfg)
    grid = [(a, b) for a in ns.axis for b in ns.axis]
    if ns.inputs:
        samples = [_read_endpoints(p) for p in ns.inputs]
        labels = list(ns.inputs)
    else:
        M = _M(ns, 20_000)
        samples = [_endpoints(ns, cfg, k, t, M) for k in ns.which]
        labels = list(ns.which)
    cfs = [estimate_char_function(s, grid) for s in samples]
    rep = compare_fields(*cfs, threshold=ns.threshold)
    files = [io.write_csv(out / "compare.csv", io.COMPARE_HEADER, rep.rows())]
    verdict = "PASS" if rep.passed else "FAIL"
    print(f"{labels[0]} vs {labels[1]}: max |z| = {rep.max_z:.2f} (threshold {rep.threshold:g}), "
          f"sup |diff| = {rep.sup_diff:.3g} -> {verdict}")
    print(f"note: {rep.note}")
    if not rep.passed and cfg.kappa != 1.0 and not ns.inputs:
        print(f"note: kappa = {cfg.kappa:g}; a mismatch with the original field is expected "
              "and informational")
    return (EXIT_OK if rep.passed else EXIT_VERIFY), files


def cmd_verify(ns, cfg, out):
    from .verify import run_checks

    t = _t(ns, cfg)
    results = run_checks(cfg, ns.level, workers=ns.workers, t=t,
                         progress=lambda r: print(r.line(), flush=True))
    files = [io.write_csv(out / "verify.csv", ("check", "form", "passed", "value", "detail"),
                          [(r.name, r.form, r.passed, float(r.value), r.detail) for r in results])]
    failed = [r.name for r in results if r.form == "oracle" and not r.passed]
    deviations = [r.name for r in results if r.form == "paper" and not r.passed]
    print(f"{sum(r.form == 'oracle' for r in results) - len(failed)} oracle checks passed, "
          f"{len(failed)} failed; published-form deviations: {', '.join(deviations) or 'none'}")
    return (EXIT_VERIFY if failed else EXIT_OK), files


COMMANDS = {"feller": cmd_feller, "simulate": cmd_simulate, "moments": cmd_moments, "msl": cmd_msl,
            "cf": cmd_cf, "density": cmd_density, "compare": cmd_compare, "verify": cmd_verify}


def _run(ns, cfg, started):
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    code, files = COMMANDS[ns.command](ns, cfg, out)
    args = {k: v for k, v in vars(ns).items()}
    io.write_manifest(out, ns.command, args, cfg, files, started)
    return code


def _replay(ns, parser, started):
    man = io.read_manifest(ns.manifest)
    args = dict(man["args"])
    if ns.out:
        args["out"] = ns.out
    defaults = vars(parser.parse_args([man["subcommand"]]))
    defaults.update(args)
    rns = argparse.Namespace(**defaults)
    cfg = config_from_dict(man["config"])
    return _run(rns, cfg, started)


def main(argv=None):
    started = time.time()
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "replay":
            return _replay(ns, parser, started)
        if ns.workers < 1:
            raise ConfigError(["workers: must be >= 1"])
        cfg = resolve_config(ns)
        return _run(ns, cfg, started)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, EstimatorError):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
