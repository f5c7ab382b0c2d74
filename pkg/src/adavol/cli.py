"""``adavol`` command line: simulate, fit, compare, bench.

Exit codes: 0 success, 2 bad arguments/configuration/input, 3 numerical
failure (including batch fits that did not converge).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .batch import RefitSchedule, rolling_refit
from .data import load_prices, log_returns, read_columns
from .errors import AdaVolError, InvalidConfig, NonConvergence, NonPositiveVariance
from .estimator import AdaVolConfig, run_stream
from .experiments import ExperimentSpec, aggregate, bench, compare, run_seeds, simulate_run
from .garch import GarchParams, ModelOrder
from .metrics import DEFAULT_ALPHAS

log = logging.getLogger("adavol")

OUT_ENV = "ADAVOL_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _order(text: str) -> ModelOrder:
    try:
        return ModelOrder.parse(text)
    except (ValueError, AdaVolError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _alphas(text: str) -> tuple[float, ...]:
    """``a,b,c`` or ``start:stop:step`` (inclusive stop)."""
    if ":" in text:
        try:
            lo, hi, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad alpha range {text!r}") from None
        k = int(round((hi - lo) / step))
        vals = tuple(round(lo + i * step, 12) for i in range(k + 1))
    else:
        vals = _floats(text)
    if not vals or any(not 0.0 < a < 1.0 for a in vals):
        raise argparse.ArgumentTypeError("quantile levels must lie strictly between 0 and 1")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--order", type=_order, default=ModelOrder(1, 1), help="lag orders p,q (default 1,1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None,
                   help=f"output directory (default ${OUT_ENV} or ./adavol_out)")


def _add_estimator(p: argparse.ArgumentParser):
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--margin", type=float, default=1e-6)
    p.add_argument("--mean-recursion", choices=("standard", "paper"), default="standard")
    p.add_argument("--minibatch", type=_positive_int, default=1)
    p.add_argument("--increment", type=_positive_int, default=2000, help="batch re-fit increment")


def _add_experiment(p: argparse.ArgumentParser, runs: int):
    p.add_argument("--n", type=_positive_int, default=20000)
    p.add_argument("--runs", type=_positive_int, default=runs)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--theta0", type=_floats, default=None,
                   help="true parameters omega,alpha..,beta.. (random when omitted)")
    p.add_argument("--init", type=_floats, default=None,
                   help="initial guess omega,alpha..,beta.. (random when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adavol", description="Streaming GARCH estimation and its batch baseline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write simulated return paths")
    _add_common(p)
    _add_experiment(p, runs=1)

    p = sub.add_parser("fit", help="estimate parameters on a return or price CSV")
    _add_common(p)
    _add_estimator(p)
    p.add_argument("input", type=Path)
    p.add_argument("--method", choices=("adavol", "batch"), default="adavol")
    p.add_argument("--prices", action="store_true", help="input holds closing prices, not returns")
    p.add_argument("--column", default="returns", help="returns column name")
    p.add_argument("--date-col", default="Date")
    p.add_argument("--close-col", default="Close")
    p.add_argument("--date-format", default="iso")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--init", type=_floats, default=None, help="initial guess omega,alpha..,beta..")

    p = sub.add_parser("compare", help="Monte Carlo comparison of both estimators")
    _add_common(p)
    _add_estimator(p)
    _add_experiment(p, runs=100)
    p.add_argument("--alphas", type=_alphas, default=tuple(DEFAULT_ALPHAS.tolist()))
    p.add_argument("--jobs", type=_positive_int, default=1)

    p = sub.add_parser("bench", help="time one AdaVol pass against per-step batch re-fits")
    p.add_argument("--orders", type=_order, nargs="+", default=[ModelOrder(1, 0), ModelOrder(1, 1)])
    p.add_argument("--ns", type=_positive_int, nargs="+", default=[1000, 2000])
    p.add_argument("--repeats", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    return parser


def _out_dir(args) -> Path:
    out = args.out or Path(os.environ.get(OUT_ENV, "adavol_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> AdaVolConfig:
    return AdaVolConfig(order=args.order, eta=args.eta, eps=args.eps, margin=args.margin,
                        mean_recursion=args.mean_recursion, minibatch=args.minibatch)


def _spec(args, config=None) -> ExperimentSpec:
    theta0 = None
    if args.theta0 is not None:
        p, q = args.order
        if len(args.theta0) != 1 + p + q:
            raise InvalidConfig(f"--theta0 needs {1 + p + q} values for order {args.order}")
        theta0 = GarchParams.from_vector(args.theta0, args.order)
    kw = {}
    if config is not None:
        kw["config"] = config
        kw["schedule"] = RefitSchedule(args.increment)
    if getattr(args, "alphas", None) is not None:
        kw["alphas"] = args.alphas
    try:
        return ExperimentSpec(order=args.order, n=args.n, runs=args.runs, seed=args.seed, theta0=theta0,
                              init=args.init, burn_in=args.burn_in, **kw)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, default=float))
    return path


def cmd_simulate(args) -> int:
    spec = _spec(args)
    out = _out_dir(args)
    runs = []
    for r in range(spec.runs):
        sim, init = simulate_run(spec, r)
        name = f"run_{r:04d}.csv"
        with (out / name).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "returns", "true_vol2"])
            for t, (x, v) in enumerate(zip(sim.returns, sim.true_vol2), start=1):
                w.writerow([t, repr(float(x)), repr(float(v))])
        runs.append({"run": r, "file": name, "seed": sim.seed, "seeds": list(run_seeds(spec, r)),
                     "theta0": sim.params.to_vector().tolist(), "init": init.tolist()})
    _write_json(out / "manifest.json", {
        "command": "simulate", "version": __version__, "order": list(spec.order), "n": spec.n,
        "burn_in": spec.burn_in, "base_seed": spec.seed, "runs": runs,
    })
    log.info("wrote %d run(s) to %s", spec.runs, out)
    return EXIT_OK


def _load_series(args) -> np.ndarray:
    if args.prices:
        prices = load_prices(args.input, args.date_col, args.close_col, args.date_format, args.delimiter)
        return np.asarray(log_returns(prices).returns)
    return read_columns(args.input, [args.column], delimiter=args.delimiter)[args.column]


def cmd_fit(args) -> int:
    x = _load_series(args)
    order = args.order
    d = 1 + order.p + order.q
    init = np.array(args.init) if args.init is not None else None
    if init is not None and init.size != d:
        raise InvalidConfig(f"--init needs {d} values for order {order}")
    out = _out_dir(args)
    stem = args.input.stem + f"_{args.method}"
    names = [f"alpha{i + 1}" for i in range(order.p)] + [f"beta{j + 1}" for j in range(order.q)]
    manifest = {"command": "fit", "version": __version__, "input": str(args.input), "method": args.method,
                "order": list(order), "n": int(x.size)}
    status = EXIT_OK
    if args.method == "adavol":
        cfg = _config(args)
        if init is None:
            init = np.concatenate(([0.0], np.full(d - 1, 0.5 / (d - 1))))
        res = run_stream(x, theta0=init[1:], config=cfg)
        res.write_csv(out / f"{stem}.csv")
        manifest.update(config=asdict(cfg), init=init.tolist(),
                        final={"omega": float(res.omega[-1]), **dict(zip(names, map(float, res.theta[-1])))},
                        next_variance=float(res.forecast[-1]))
    else:
        if x.size < args.increment:
            log.warning("n=%d is below the re-fit increment %d; falling back to a single fit "
                        "on the whole series", x.size, args.increment)
        if init is None:
            init = np.concatenate(([max(float(np.var(x)), 1e-12) * 0.5], np.full(d - 1, 0.5 / (d - 1))))
        fit = rolling_refit(x, init, order, RefitSchedule(args.increment))
        with (out / f"{stem}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "omega", *names, "variance"])
            for t in range(x.size):
                w.writerow([t + 1, *map(repr, map(float, fit.theta[t])), repr(float(fit.variance[t]))])
        manifest.update(init=init.tolist(), increment=args.increment, refit_ends=fit.ends,
                        nonconverged=fit.n_nonconverged, total_iterations=fit.total_iterations,
                        final=dict(zip(["omega", *names], map(float, fit.theta[-1]))))
        if fit.n_nonconverged:
            log.error("%d of %d batch fits did not converge", fit.n_nonconverged, len(fit.fits))
            status = EXIT_NUMERIC
    _write_json(out / f"{stem}.json", manifest)
    return status


def cmd_compare(args) -> int:
    spec = _spec(args, config=_config(args))
    out = _out_dir(args)
    if spec.n < spec.schedule.increment:
        log.warning("n=%d is below the re-fit increment %d; batch uses a single fit per run",
                    spec.n, spec.schedule.increment)
    outcomes = compare(spec, jobs=args.jobs)
    with (out / "runs.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "seed", "method", "mpe", "mape", "mae", "qs", "batch_nonconverged"])
        for o in outcomes:
            for method in ("adavol", "batch"):
                rep = o.report(method)
                w.writerow([o.run, o.seed, method, repr(rep.mpe), repr(rep.mape), repr(rep.mae), repr(rep.qs),
                            o.batch_nonconverged if method == "batch" else 0])
    summary = aggregate(outcomes)
    _write_json(out / "summary.json", summary)
    _write_json(out / "manifest.json", {
        "command": "compare", "version": __version__, "order": list(spec.order), "n": spec.n,
        "runs": spec.runs, "base_seed": spec.seed, "increment": spec.schedule.increment,
        "config": asdict(spec.config), "alphas": list(spec.alphas),
        "per_run": [{"run": o.run, "seed": o.seed, "theta0": o.true_params, "init": o.init,
                     "adavol_final": o.adavol_final, "batch_final": o.batch_final} for o in outcomes],
    })
    for method in ("adavol", "batch"):
        s = summary[method]
        print(f"{method:7s} median MPE {s['mpe']['median']:+.4g}  MAPE {s['mape']['median']:.4g}  "
              f"QS {s['qs']['median']:.6g}  MAE {s['mae']['median']:.6g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = bench(args.orders, args.ns, args.repeats, args.seed)
    print(f"{'order':<12}{'n':>7}{'adavol':>10}{'batch':>12}{'seconds (batch)':>18}")
    table = []
    for r in rows:
        norm = r.normalized()
        print(f"{str(r.order):<12}{r.n:>7}{norm['adavol']:>10.2f}{norm['batch']:>12.2f}{r.batch_seconds:>18.3f}")
        table.append({"order": list(r.order), "n": r.n, "adavol_seconds": r.adavol_seconds,
                      "batch_seconds": r.batch_seconds, "ratio": r.ratio, "normalized": norm})
    if args.out is not None or os.environ.get(OUT_ENV):
        _write_json(_out_dir(args) / "bench.json", {"command": "bench", "version": __version__, "rows": table})
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "compare": cmd_compare, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_CONFIG
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergence)
            return COMMANDS[args.command](args)
    except (NonPositiveVariance, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (AdaVolError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
