"""Command-line front end.

Exit codes: 0 on success, 1 on a computation or I/O error (one
``error: <Kind>: <reason>`` line on stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .core import log_transform, read_csv, read_values, write_values
from .diagnostics import ljung_box, s_statistic
from .exceptions import PeriodiagError
from .experiments import (
    ForecastEval,
    backtest,
    combine_forecasts,
    table1_experiment,
)
from .par import fit_par, residuals_par, select_orders_minimal, select_orders_subset
from .periodic_stats import periodic_autocovariance, periodic_pacf
from .sarima import SarimaSpec, fit_sarima

PROG = "periodiag"


def _triple(text):
    parts = [int(p) for p in text.replace(" ", "").split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated integers, got {text!r}")
    return tuple(parts)


def _int_list(text):
    try:
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _add_data_args(p, data=True):
    if data:
        p.add_argument("data", help="CSV file with the series")
    p.add_argument("--s", type=int, default=12, help="periods per year (default 12)")
    p.add_argument("--layout", choices=["flat_column", "year_by_period"], default="flat_column")
    p.add_argument("--log", action="store_true", help="analyze natural logs of the data")
    p.add_argument("--log-shift", type=float, default=None, metavar="C",
                   help="add C before taking logs (implies --log)")


def _add_output_args(p):
    p.add_argument("-o", "--output", help="write the CSV table here instead of stdout")
    p.add_argument("--format", choices=["csv", "pretty"], default="csv")


def _add_sarima_args(p, required=True):
    p.add_argument("--order", type=_triple, required=required, default=(1, 0, 0),
                   help="non-seasonal p,d,q")
    p.add_argument("--seasonal", type=_triple, default=(0, 0, 0), help="seasonal P,D,Q")
    mean = p.add_mutually_exclusive_group()
    mean.add_argument("--mean", dest="include_mean", action="store_true", default=None)
    mean.add_argument("--no-mean", dest="include_mean", action="store_false")
    p.add_argument("--starts", type=int, default=5, help="optimizer starts")
    p.add_argument("--seed", type=int, default=0, help="optimizer jitter seed")


def build_parser():
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="periodic autocovariance, autocorrelation and PACF")
    _add_data_args(p)
    p.add_argument("--max-lag", type=int, default=3)
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.05)
    _add_output_args(p)
    p.set_defaults(func=cmd_stats)

    par = sub.add_parser("par", help="periodic autoregression")
    par_sub = par.add_subparsers(dest="action", required=True)
    p = par_sub.add_parser("fit", help="fit with given orders")
    _add_data_args(p)
    p.add_argument("--orders", type=_int_list, required=True,
                   help="one order for all periods or a comma-separated list of s orders")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_par_fit)

    p = par_sub.add_parser("select", help="select orders and fit")
    _add_data_args(p)
    p.add_argument("--method", choices=["minimal", "subset"], default="minimal")
    p.add_argument("--criterion", choices=["aic", "bic"], default="bic")
    p.add_argument("--p-max", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_par_select)

    p = par_sub.add_parser("forecast", help="hold-out one-step forecasts")
    _add_data_args(p)
    p.add_argument("--holdout-years", type=int, default=3)
    p.add_argument("--method", choices=["minimal", "subset"], default="minimal")
    _add_output_args(p)
    p.set_defaults(func=cmd_par_forecast)

    sar = sub.add_parser("sarima", help="seasonal ARMA")
    sar_sub = sar.add_subparsers(dest="action", required=True)
    p = sar_sub.add_parser("fit", help="fit by conditional sum of squares")
    _add_data_args(p)
    _add_sarima_args(p)
    p.add_argument("--residuals", help="write residuals to this CSV")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sarima_fit)

    diag = sub.add_parser("diag", help="residual diagnostics")
    diag_sub = diag.add_subparsers(dest="action", required=True)
    p = diag_sub.add_parser("s-test", help="periodic residual autocorrelation test")
    p.add_argument("residuals", help="CSV column of residuals in time order")
    p.add_argument("--s", type=int, default=12)
    p.add_argument("--last-period", type=int, default=None,
                   help="period of the final residual (default s)")
    p.add_argument("--lb-lags", type=int, default=None, help="also run Ljung-Box")
    p.add_argument("--fitted-params", type=int, default=0)
    _add_output_args(p)
    p.set_defaults(func=cmd_s_test)

    exp = sub.add_parser("exp", help="experiments")
    exp_sub = exp.add_subparsers(dest="action", required=True)
    p = exp_sub.add_parser("table1", help="Monte Carlo size of the periodic test")
    p.add_argument("--phi", type=float, nargs="+", required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--n-years", type=int, default=17)
    p.add_argument("--s", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--critical", type=float, default=21.0261)
    p.add_argument("--no-mean", dest="include_mean", action="store_false")
    p.add_argument("--jobs", type=int, default=None)
    _add_output_args(p)
    p.set_defaults(func=cmd_table1)

    p = exp_sub.add_parser("backtest", help="frozen-parameter hold-out forecasts")
    _add_data_args(p)
    p.add_argument("--model", choices=["par-minimal", "par-subset", "sarima"], required=True)
    p.add_argument("--holdout", type=int, default=3, help="hold-out years")
    _add_sarima_args(p, required=False)
    _add_output_args(p)
    p.set_defaults(func=cmd_backtest)

    p = exp_sub.add_parser("combine", help="combine backtest forecast files")
    p.add_argument("files", nargs="+", help="CSV files written by `exp backtest`")
    p.add_argument("--method", choices=["average", "inverse-mse"], default="average")
    p.add_argument("--window", type=int, default=None)
    _add_output_args(p)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("analyze", help="fit seasonal ARMA and run residual checks")
    _add_data_args(p)
    _add_sarima_args(p)
    p.add_argument("--lb-lags", type=int, default=24)
    p.set_defaults(func=cmd_analyze)
    return parser


def _load(args):
    series = read_csv(args.data, args.layout, args.s)
    if args.log or args.log_shift is not None:
        series = log_transform(series, args.log_shift)
    return series


def _emit(args, header, rows, summary, out=None):
    """Write a CSV table (file or stdout) and a summary block."""
    out = sys.stdout if out is None else out
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if getattr(args, "output", None):
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
        out.write(summary + "\n")
    elif getattr(args, "format", "csv") == "pretty":
        out.write(_pretty(header, rows) + "\n" + summary + "\n")
    else:
        out.write(text)
        out.write("".join(f"# {line}\n" for line in summary.splitlines()))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _pretty(header, rows):
    cells = [list(map(str, header))] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
    return "\n".join(" ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


def _write_json(doc, path):
    text = json.dumps(doc, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_stats(args):
    series = _load(args)
    acf = periodic_autocovariance(series, args.max_lag)
    pacf = periodic_pacf(series, args.max_order, alpha=args.alpha)
    rows = []
    for name, table in (("gamma", acf.gamma), ("rho", acf.rho)):
        for m in range(series.s):
            for lag in range(args.max_lag + 1):
                rows.append((name, m + 1, lag, table[m, lag], acf.n_pairs[m, lag], ""))
    for m in range(series.s):
        for k in range(args.max_order):
            rows.append(("pacf", m + 1, k + 1, pacf.pacf[m, k], "", pacf.band))
    summary = f"{series.label}: N={series.n_years}, s={series.s}, pacf band=±{pacf.band:.4f}"
    _emit(args, ["table", "m", "lag", "value", "n_pairs", "band"], rows, summary)


def _par_doc(model, series):
    doc = model.to_dict()
    doc["label"] = series.label
    doc["transform"] = series.transform
    return doc


def cmd_par_fit(args):
    series = _load(args)
    orders = args.orders[0] if len(args.orders) == 1 else args.orders
    _write_json(_par_doc(fit_par(series, orders), series), args.output)


def cmd_par_select(args):
    series = _load(args)
    if args.method == "minimal":
        model = fit_par(series, select_orders_minimal(series, args.p_max, args.alpha))
    else:
        model = select_orders_subset(series, args.p_max, args.criterion)
    doc = _par_doc(model, series)
    doc["method"] = args.method
    if args.method == "subset":
        doc["criterion"] = args.criterion
    _write_json(doc, args.output)


def _backtest_rows(ev, series, holdout):
    start_year = series.n_years - holdout
    rows = []
    for i, (f, y) in enumerate(zip(ev.forecasts, ev.actuals)):
        r, m = divmod(i, series.s)
        t = start_year * series.s + i + 1
        rows.append((t, start_year + r + 1, m + 1, f, y))
    return rows


def _eval_summary(ev):
    return f"{ev.label}: n={ev.n}, rmse={ev.rmse:.6g}, mae={ev.mae:.6g}"


def cmd_par_forecast(args):
    series = _load(args)
    kind = "par_minimal" if args.method == "minimal" else "par_subset"
    ev = backtest(series, kind, args.holdout_years)
    _emit(args, ["t", "year", "period", "forecast", "actual"],
          _backtest_rows(ev, series, args.holdout_years), _eval_summary(ev))


def _spec(args):
    return SarimaSpec.from_orders(args.order, args.seasonal, args.s, args.include_mean)


def cmd_sarima_fit(args):
    series = _load(args)
    fit = fit_sarima(series, _spec(args), n_starts=args.starts, random_state=args.seed)
    if args.residuals:
        write_values(fit.residuals, args.residuals, header="residual")
    doc = fit.to_dict()
    doc["label"] = series.label
    _write_json(doc, args.output)


def cmd_s_test(args):
    resid = read_values(args.residuals)
    report = s_statistic(resid, args.s, last_period=args.last_period,
                         ljung_box_lags=args.lb_lags, fitted_params=args.fitted_params)
    summary = f"S = {report.S:.6g}, df = {report.df}, p-value = {report.p_value:.6g}"
    if report.ljung_box is not None:
        q, dof, p = report.ljung_box
        summary += f"\nLjung-Box Q = {q:.6g}, df = {dof}, p-value = {p:.6g}"
    _emit(args, ["m", "r1", "N_m"], report.rows(), summary)


def cmd_table1(args):
    rows = []
    for phi in args.phi:
        res = table1_experiment(phi, n_years=args.n_years, s=args.s, n_reps=args.reps,
                                seed=args.seed, critical=args.critical,
                                include_mean=args.include_mean, n_jobs=args.jobs)
        rows.append(res.as_row())
    header = list(rows[0])
    summary = "\n".join(
        f"phi1={r['phi1']:+.2f}: mean S={r['mean_S']:.2f}, var S={r['var_S']:.2f}, "
        f"level={r['empirical_level']:.3f}" for r in rows
    )
    _emit(args, header, [list(r.values()) for r in rows], summary)


def cmd_backtest(args):
    series = _load(args)
    if args.model == "sarima":
        model = _spec(args)
    else:
        model = args.model.replace("-", "_")
    ev = backtest(series, model, args.holdout, label=args.model)
    _emit(args, ["t", "year", "period", "forecast", "actual"],
          _backtest_rows(ev, series, args.holdout), _eval_summary(ev))


def _read_eval(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    try:
        fi, ai = header.index("forecast"), header.index("actual")
    except ValueError:
        raise PeriodiagError(f"{path}: needs 'forecast' and 'actual' columns") from None
    f = [float(r[fi]) for r in body]
    y = [float(r[ai]) for r in body]
    return ForecastEval(path, f, y), body, header


def cmd_combine(args):
    loaded = [_read_eval(p) for p in args.files]
    evals = [e for e, _, _ in loaded]
    method = "simple_average" if args.method == "average" else "inverse_mse"
    comb = combine_forecasts(evals, method, window=args.window)
    _, body, header = loaded[0]
    keys = [c for c in ("t", "year", "period") if c in header]
    idx = [header.index(c) for c in keys]
    rows = [[r[i] for i in idx] + [f, y]
            for r, f, y in zip(body, comb.forecasts, comb.actuals)]
    summary = "\n".join([_eval_summary(e) for e in evals] + [_eval_summary(comb)])
    _emit(args, keys + ["forecast", "actual"], rows, summary)


def cmd_analyze(args):
    series = _load(args)
    spec = _spec(args)
    fit = fit_sarima(series, spec, n_starts=args.starts, random_state=args.seed)
    lb = ljung_box(fit.residuals, args.lb_lags, spec.n_coef)
    report = s_statistic(fit.residuals, spec.s)
    out = [
        f"series: {series.label} (N={series.n_years}, s={series.s}, transform={series.transform})",
        f"model: {spec}, mean={'yes' if spec.include_mean else 'no'}",
        f"  phi={np.round(fit.phi, 4).tolist()} theta={np.round(fit.theta, 4).tolist()} "
        f"Phi={np.round(fit.Phi, 4).tolist()} Theta={np.round(fit.Theta, 4).tolist()}",
        f"  sigma2={fit.sigma2:.6g}, css={fit.css:.6g}, converged={fit.converged}",
        f"Ljung-Box: Q={lb[0]:.4f}, df={lb[1]}, p-value={lb[2]:.4g}",
        "periodic residual autocorrelation:",
        report.summary(),
    ]
    print("\n".join(out))


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (PeriodiagError, ValueError, OSError) as exc:
        reason = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {reason}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
