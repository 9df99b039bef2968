"""Command-line entry point: ``filtercast {sample,metrics,forecast,experiment,synth}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import arima, harness, metrics, rnn
from .errors import FiltercastError
from .io import read_count_series, read_event_log, write_count_series, write_event_log
from .sampling import BinomialThinning, CategoryStack, RiskThreshold, apply_scheme
from .series import znormalize
from .synthgen import InarSpec, LabelSpec, gen_inar, gen_labeled_log

log = logging.getLogger("filtercast")


def _int_triple(text: str) -> tuple[int, int, int]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated integers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated integers, got {text!r}")
    return vals


def _lag_window(text: str) -> tuple[int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) == 1:
        return (1, parts[0])
    if len(parts) == 2:
        return (parts[0], parts[1])
    raise argparse.ArgumentTypeError("lag window is MAX or MIN,MAX")


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_sample(args) -> int:
    if args.scheme == "binomial":
        if args.p is None:
            raise FiltercastError("--p is required for binomial sampling")
        scheme = BinomialThinning(args.p, args.trials, args.seed)
        source = read_count_series(args.input) if not args.events else read_event_log(args.input)
    else:
        if args.scheme == "threshold":
            if args.t is None:
                raise FiltercastError("--t is required for threshold sampling")
            scheme = RiskThreshold(args.t)
        else:
            if args.k is None:
                raise FiltercastError("--k is required for category sampling")
            scheme = CategoryStack(args.k)
        source = read_event_log(args.input)
    trials = apply_scheme(scheme, source)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    paths = []
    for i, s in enumerate(trials):
        path = out / f"{stem}_{args.scheme}_{scheme.param}_{i:03d}.csv"
        write_count_series(s, path)
        paths.append(str(path))
    (out / "scheme.json").write_text(json.dumps(scheme.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    _emit({"scheme": scheme.to_dict(), "files": paths})
    return 0


def cmd_metrics(args) -> int:
    s = read_count_series(args.series)
    lag = metrics.best_lag(s, args.lag_window) if args.lag is None else args.lag
    pe = metrics.permutation_entropy(s, args.pe_order)
    _emit({"lag": lag, "acf": metrics.acf_at_lag(s, lag), "pe_nats": pe.entropy_nats,
           "pe_normalized": pe.normalized})
    return 0


def cmd_forecast(args) -> int:
    s = read_count_series(args.train)
    ns = znormalize(s, args.ddof)
    if args.model == "arima":
        model = arima.grid_search(ns.values, args.grid)
        doc = {"model": model.to_dict()}
        nxt = arima.forecast_one(model, ns.values)
    else:
        spec = rnn.RnnSpec(hidden=args.hidden, window=args.window, seed=args.seed, epochs=args.epochs,
                           lr=args.lr)
        model = rnn.train(spec, rnn.make_windows(ns.values, window=spec.window))
        doc = {"model": model.to_dict()}
        nxt = rnn.predict_next(model, ns.values[-spec.window:])
    doc["normalization"] = {"mean": ns.mean, "std": ns.std, "ddof": ns.ddof}
    doc["next_normalized"] = float(nxt)
    doc["next"] = float(nxt * ns.std + ns.mean)
    if args.output:
        Path(args.output).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(doc)
    return 0


def cmd_experiment(args) -> int:
    path = Path(args.config)
    doc = json.loads(path.read_text(encoding="utf-8"))
    outcome = harness.run_experiment(doc, path.parent)
    for f in outcome.files:
        print(f)
    if outcome.failures:
        log.warning("%d trial or retrain failure(s); see the failures column", outcome.failures)
    return outcome.exit_code


def cmd_synth(args) -> int:
    spec = InarSpec(args.alpha, args.lam, args.days, args.seed)
    series = gen_inar(spec)
    if args.labels:
        labels = LabelSpec.load(args.labels)
        write_event_log(gen_labeled_log(series, labels, args.seed), args.output)
    else:
        write_count_series(series, args.output)
    print(args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filtercast", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="filter a series or event log")
    p.add_argument("--scheme", choices=("binomial", "threshold", "category"), required=True)
    p.add_argument("--p", type=float, help="survival probability (binomial)")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=int, help="risk threshold (threshold)")
    p.add_argument("--k", type=int, help="number of rarest categories kept (category)")
    p.add_argument("--events", action="store_true", help="binomial input is an event log")
    p.add_argument("input")
    p.add_argument("output", help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("metrics", help="autocorrelation and permutation entropy of a series")
    p.add_argument("--pe-order", type=int, default=metrics.DEFAULT_PE_ORDER)
    p.add_argument("--lag-window", type=_lag_window, default=metrics.DEFAULT_LAG_WINDOW,
                   help="MAX or MIN,MAX (default 1,7)")
    p.add_argument("--lag", type=int, help="fixed lag instead of the best lag in the window")
    p.add_argument("series")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("forecast", help="fit a model and forecast the next day")
    p.add_argument("--model", choices=("arima", "rnn"), required=True)
    p.add_argument("--grid", type=_int_triple, default=arima.GRID_BOUNDS, help="max p,d,q")
    p.add_argument("--hidden", type=int, default=rnn.RnnSpec.hidden)
    p.add_argument("--window", type=int, default=rnn.RnnSpec.window)
    p.add_argument("--epochs", type=int, default=rnn.RnnSpec.epochs)
    p.add_argument("--lr", type=float, default=rnn.RnnSpec.lr)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ddof", type=int, default=0)
    p.add_argument("-o", "--output", help="also write the model JSON here")
    p.add_argument("train")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("experiment", help="run a sweep from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="generate an INAR(1) series or labelled event log")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels", help="label spec JSON; writes an event log instead of counts")
    p.add_argument("output")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FiltercastError, OSError, json.JSONDecodeError) as exc:
        print(f"filtercast: error: {exc}", file=sys.stderr)
        return harness.EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
