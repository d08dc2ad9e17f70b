"""Command-line pipeline: synth, prep, featurize, train, cv, rfecv, qtrain, backtest, experiment, report.

Exit codes: 0 success, 2 usage or configuration error (including missing
inputs), 1 runtime failure. Every command writes ``manifest_<command>.json``
next to its outputs with the resolved configuration and SHA-256 digests of
inputs and outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from . import __version__
from .backtest import Strategy, compare, equity_svg, next_day_returns, run, write_comparison, EquityCurve
from .classify import (
    ModelKind,
    cross_validate,
    default_grid,
    evaluate,
    fit_model,
    load_model,
    rfecv,
    save_model,
)
from .features import Dataset, TargetKind, Windows, build_dataset, technical_names
from .ingest import SourceTag, load_prices, load_tweets, write_prices, write_tweets
from .qlearn import EpisodeConfig, run_training, save_weights, load_weights
from .synth import SynthParams, generate_tweets, generate, latent_series
from .tweetprep import ENGLISH_THRESHOLD, load_lexicon, load_sentiment_days, prepare_corpus, write_sentiment_days

log = logging.getLogger("sentitrade")


class UsageError(Exception):
    """Bad flags, config or missing inputs (exit code 2)."""


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(*paths: str | Path | None) -> None:
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise UsageError(f"input file not found: {p}")


def _write_manifest(command: str, args: argparse.Namespace, inputs: Sequence[Path | str], outputs: Sequence[Path | str]) -> Path:
    """Write ``<dir>/manifest_<command>.json`` for directory outputs, else ``<out>.manifest.json``."""
    outputs = [Path(p) for p in outputs]
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if p is not None},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    out = Path(args.out) if getattr(args, "out", None) else outputs[0].parent
    path = out / f"manifest_{command}.json" if out.is_dir() else out.with_suffix(".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parent(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- commands ---------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> None:
    try:
        params = SynthParams(
            n_days=args.days,
            seed=args.seed,
            signal_strength=args.beta,
            noise_vol=args.noise_vol,
            market_vol=args.market_vol,
            tweet_rate=args.tweet_rate,
            regime_switch_prob=args.event_prob,
            ticker_signal_share=args.ticker_signal_share,
            ticker_rate_share=args.ticker_rate_share,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(Path(args.out))
    bars, _ = generate(params)
    write_prices(bars, out / "prices.csv")
    write_tweets(generate_tweets(params, SourceTag.PRODUCT), out / "tweets_product.jsonl")
    write_tweets(generate_tweets(params, SourceTag.TICKER), out / "tweets_ticker.jsonl")
    with open(out / "latent.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "latent"])
        for d, v in latent_series(params):
            w.writerow([d.isoformat(), repr(v)])
    outputs = [out / n for n in ("prices.csv", "tweets_product.jsonl", "tweets_ticker.jsonl", "latent.csv")]
    _write_manifest("synth", args, [], outputs)


def cmd_prep(args: argparse.Namespace) -> None:
    _require(args.tweets, args.prices, args.lexicon)
    bars = load_prices(args.prices)
    lex = load_lexicon(args.lexicon)
    tweets = load_tweets(args.tweets, args.tag)
    result = prepare_corpus(tweets, [b.date for b in bars], lex, args.english_threshold)
    out = _parent(Path(args.out))
    write_sentiment_days(result.days, out)
    rej = out.with_suffix(".rejections.json")
    rej.write_text(json.dumps({"total": len(tweets), "kept": result.kept, "rejected": result.rejections}, indent=2, sort_keys=True) + "\n")
    _write_manifest("prep", args, [args.tweets, args.prices, args.lexicon], [out, rej])


def _windows(args: argparse.Namespace) -> Windows:
    try:
        return Windows(args.momentum, args.volatility, args.sent_momentum, args.sent_reversal)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_featurize(args: argparse.Namespace) -> None:
    _require(args.prices, args.sentiment)
    bars = load_prices(args.prices)
    days = load_sentiment_days(args.sentiment)
    ds = build_dataset(bars, days, args.target, _windows(args), SourceTag(args.tag) if args.tag else None)
    out = _parent(Path(args.out))
    ds.save(out)
    _write_manifest("featurize", args, [args.prices, args.sentiment], [out, out.with_suffix(".json")])


def _load_dataset(path: str) -> Dataset:
    _require(path, Path(path).with_suffix(".json"))
    return Dataset.load(path)


def _model_frame(ds: Dataset, model: str) -> tuple[Dataset, ModelKind]:
    """Baseline is logistic regression on the technical columns only."""
    if model == "baseline":
        return ds.select(technical_names(ds.windows)), ModelKind.LOGREG
    return ds, ModelKind(model)


def _grid(args: argparse.Namespace, kind: ModelKind) -> list[dict]:
    cs = args.cs if getattr(args, "C", None) is None else [args.C]
    gammas = args.gammas if getattr(args, "gamma", None) is None else [args.gamma]
    return default_grid(kind, cs, gammas)


def _fit_with_cv(ds: Dataset, model: str, args: argparse.Namespace):
    frame, kind = _model_frame(ds, model)
    Xtr, ytr = frame.train()
    grid = _grid(args, kind)
    report = cross_validate(Xtr, ytr, grid, kind, args.folds)
    fitted = fit_model(kind, Xtr, ytr, report.best_point, frame.feature_names)
    return frame, report, fitted


def cmd_train(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    frame, report, model = _fit_with_cv(ds, args.model, args)
    out = _parent(Path(args.out))
    save_model(model, out)
    Xtr, ytr = frame.train()
    Xte, yte = frame.test()
    metrics = {
        "model": args.model,
        "best_point": report.best_point,
        "cv_accuracy": report.best_accuracy,
        "train_accuracy": evaluate(model, Xtr, ytr).accuracy,
        "test": asdict(evaluate(model, Xte, yte)),
        "feature_names": frame.feature_names,
    }
    mpath = out.with_suffix(".metrics.json")
    mpath.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    _write_manifest("train", args, [args.dataset, Path(args.dataset).with_suffix(".json")], [out, mpath])


def cmd_cv(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    frame, kind = _model_frame(ds, args.model)
    Xtr, ytr = frame.train()
    report = cross_validate(Xtr, ytr, _grid(args, kind), kind, args.folds)
    out = _parent(Path(args.out))
    rows = report.rows()
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _write_manifest("cv", args, [args.dataset], [out])


def cmd_rfecv(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    frame, kind = _model_frame(ds, args.model)
    Xtr, ytr = frame.train()
    result = rfecv(Xtr, ytr, frame.feature_names, kind, _grid(args, kind), args.folds, args.seed)
    out = _parent(Path(args.out))
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_features", "cv_accuracy", "C", "gamma", "features"])
        for step in result.trace:
            w.writerow([len(step.features), repr(step.cv_accuracy), step.best_point["C"], step.best_point.get("gamma", ""), " ".join(step.features)])
    sel = out.with_suffix(".selected.json")
    sel.write_text(json.dumps({"selected": result.selected}, indent=2) + "\n")
    _write_manifest("rfecv", args, [args.dataset], [out, sel])


def _episode_config(args: argparse.Namespace) -> EpisodeConfig:
    try:
        return EpisodeConfig(
            epsilon0=args.epsilon,
            epsilon_decay=args.epsilon_decay,
            epsilon_floor=args.epsilon_floor,
            leverage_limit=args.leverage,
            stop_loss=args.stop_loss,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_qtrain(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    _require(args.prices)
    bars = load_prices(args.prices)
    cfg = _episode_config(args)
    X, _ = ds.train()
    _, R = next_day_returns(ds, bars, slice(0, ds.split_index))
    if not (0 < args.lr <= 1 and 0 <= args.discount <= 1):
        raise UsageError("--lr must lie in (0, 1] and --discount in [0, 1]")
    result = run_training(X, R, cfg, args.epochs, args.lr, args.discount, ds.feature_names)
    out = _parent(Path(args.out))
    save_weights(result, out, {"epochs": args.epochs, "target_kind": ds.target_kind.value})
    _write_manifest("qtrain", args, [args.dataset, args.prices], [out])


ALL_STRATEGIES = ("qlearning", "ml", "baseline", "oracle")


def cmd_backtest(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    _require(args.prices)
    bars = load_prices(args.prices)
    wanted = args.strategies
    unknown = set(wanted) - set(ALL_STRATEGIES)
    if unknown:
        raise UsageError(f"unknown strategies {sorted(unknown)}")
    sources = {"qlearning": args.qweights, "ml": args.ml_model, "baseline": args.baseline_model}
    for name in wanted:
        if name in sources and sources[name] is None:
            raise UsageError(f"strategy {name!r} needs its artifact flag")
        _require(sources.get(name))
    strategies = []
    for name in wanted:
        if name == "qlearning":
            weights, cfg = load_weights(args.qweights)
            strategies.append(Strategy.qlearning(weights, cfg or EpisodeConfig(), online=not args.no_online))
        elif name == "ml":
            strategies.append(Strategy.ml_signal(load_model(args.ml_model)))
        elif name == "baseline":
            strategies.append(Strategy.baseline(load_model(args.baseline_model)))
        else:
            strategies.append(Strategy.oracle())
    curves = [run(s, ds, bars, args.cost) for s in strategies]
    out = _out_dir(Path(args.out))
    outputs = []
    for c in curves:
        p = out / f"equity_{c.name}.csv"
        c.to_csv(p)
        outputs.append(p)
    stats = compare(curves)
    write_comparison(stats, out / "comparison.csv")
    (out / "equity.svg").write_text(equity_svg(curves))
    outputs += [out / "comparison.csv", out / "equity.svg"]
    inputs = [args.dataset, args.prices] + [sources[n] for n in wanted if n in sources]
    _write_manifest("backtest", args, inputs, outputs)
    for s in stats:
        log.info("%-10s final equity %.4g  max drawdown %.3f  hit rate %.3f", s.name, s.final_equity, s.max_drawdown, s.hit_rate)


def cmd_experiment(args: argparse.Namespace) -> None:
    _require(args.prices)
    bars = load_prices(args.prices)
    sent_paths = {"ticker": args.ticker_sentiment, "product": args.product_sentiment}
    for tset in args.tweet_sets:
        if tset not in sent_paths:
            raise UsageError(f"unknown tweet set {tset!r}")
        if sent_paths[tset] is None:
            raise UsageError(f"tweet set {tset!r} requested but --{tset}-sentiment not given")
        _require(sent_paths[tset])
    for m in args.models:
        if m not in ("logreg", "svm", "baseline"):
            raise UsageError(f"unknown model {m!r}")
    windows = _windows(args)
    rows = []
    for target in args.targets:
        try:
            target_kind = TargetKind(target)
        except ValueError as exc:
            raise UsageError(f"unknown target {target!r}") from exc
        for tset in args.tweet_sets:
            days = load_sentiment_days(sent_paths[tset])
            ds = build_dataset(bars, days, target_kind, windows, SourceTag(tset))
            for model in args.models:
                frame, report, fitted = _fit_with_cv(ds, model, args)
                Xtr, ytr = frame.train()
                Xte, yte = frame.test()
                rows.append({
                    "target": target_kind.value,
                    "tweet_set": tset,
                    "model": model,
                    "C": report.best_point["C"],
                    "gamma": report.best_point.get("gamma", ""),
                    "train_accuracy": evaluate(fitted, Xtr, ytr).accuracy,
                    "dev_accuracy": report.best_accuracy,
                    "test_accuracy": evaluate(fitted, Xte, yte).accuracy,
                    "n_train": len(ytr),
                    "n_test": len(yte),
                })
    out = _parent(Path(args.out))
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})
    inputs = [args.prices] + [sent_paths[t] for t in args.tweet_sets]
    _write_manifest("experiment", args, inputs, [out])


def cmd_report(args: argparse.Namespace) -> None:
    src = Path(args.backtest_dir)
    files = sorted(src.glob("equity_*.csv"))
    if not files:
        raise UsageError(f"no equity_*.csv files in {src}")
    curves = [EquityCurve.from_csv(p, p.stem[len("equity_"):]) for p in files]
    stats = compare(curves)
    out = _out_dir(Path(args.out) if args.out else src)
    lines = [
        "# Backtest report",
        "",
        f"Test range: {curves[0].dates[0].isoformat()} to {curves[0].dates[-1].isoformat()} ({len(curves[0])} trading days)",
        "",
        "| strategy | final equity | annualized return | max drawdown | hit rate |",
        "|---|---:|---:|---:|---:|",
    ]
    for s in stats:
        lines.append(f"| {s.name} | {s.final_equity:.4g} | {s.annualized_return:.2%} | {s.max_drawdown:.2%} | {s.hit_rate:.3f} |")
    lines += ["", "![equity](report_equity.svg)", ""]
    (out / "report.md").write_text("\n".join(lines))
    (out / "report_equity.svg").write_text(equity_svg(curves))
    write_comparison(stats, out / "report_comparison.csv")
    _write_manifest("report", args, files, [out / "report.md", out / "report_equity.svg", out / "report_comparison.csv"])


# -- parser -----------------------------------------------------------------


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cs", type=_floats, default=[0.01, 0.1, 1.0, 10.0, 100.0], help="C grid, comma-separated")
    p.add_argument("--gammas", type=_floats, default=[0.01, 0.1, 1.0, 10.0], help="gamma grid for the SVM")
    p.add_argument("--folds", type=_positive_int, default=3)


def _add_window_flags(p: argparse.ArgumentParser) -> None:
    w = Windows()
    p.add_argument("--momentum", type=_positive_int, default=w.momentum)
    p.add_argument("--volatility", type=_positive_int, default=w.volatility)
    p.add_argument("--sent-momentum", type=_positive_int, default=w.sent_momentum)
    p.add_argument("--sent-reversal", type=_positive_int, default=w.sent_reversal)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentitrade", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key = value file; explicit flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic market and tweet corpus")
    d = SynthParams()
    p.add_argument("--days", type=int, default=d.n_days)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--beta", type=float, default=d.signal_strength, help="sentiment -> next-day alpha coefficient")
    p.add_argument("--noise-vol", type=float, default=d.noise_vol)
    p.add_argument("--market-vol", type=float, default=d.market_vol)
    p.add_argument("--tweet-rate", type=float, default=d.tweet_rate)
    p.add_argument("--event-prob", type=float, default=d.regime_switch_prob)
    p.add_argument("--ticker-signal-share", type=float, default=d.ticker_signal_share)
    p.add_argument("--ticker-rate-share", type=float, default=d.ticker_rate_share)
    p.add_argument("--out", default="synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prep", help="filter, score and aggregate tweets per trading day")
    p.add_argument("--tweets", required=True)
    p.add_argument("--prices", required=True, help="price CSV supplying the trading calendar")
    p.add_argument("--tag", choices=[t.value for t in SourceTag], default="product")
    p.add_argument("--lexicon", default=None, help="token,score CSV (default: bundled lexicon)")
    p.add_argument("--english-threshold", type=float, default=ENGLISH_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("featurize", help="build a labeled, normalized dataset")
    p.add_argument("--prices", required=True)
    p.add_argument("--sentiment", required=True)
    p.add_argument("--target", choices=[t.value for t in TargetKind], default="alpha")
    p.add_argument("--tag", choices=[t.value for t in SourceTag], default=None)
    _add_window_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    for name, func, help_ in (
        ("train", cmd_train, "fit a classifier, choosing hyperparameters by CV"),
        ("cv", cmd_cv, "cross-validate a hyperparameter grid"),
        ("rfecv", cmd_rfecv, "recursive feature elimination with CV"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--dataset", required=True)
        p.add_argument("--model", choices=["logreg", "svm", "baseline"], default="logreg")
        _add_grid_flags(p)
        if name == "train":
            p.add_argument("--C", type=float, default=None, help="fix C instead of searching the grid")
            p.add_argument("--gamma", type=float, default=None)
        if name == "rfecv":
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("qtrain", help="train the Q-learning agent on the training half")
    p.add_argument("--dataset", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--epochs", type=_positive_int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--discount", type=float, default=0.95)
    c = EpisodeConfig()
    p.add_argument("--epsilon", type=float, default=c.epsilon0)
    p.add_argument("--epsilon-decay", type=float, default=c.epsilon_decay)
    p.add_argument("--epsilon-floor", type=float, default=c.epsilon_floor)
    p.add_argument("--leverage", type=int, default=c.leverage_limit)
    p.add_argument("--stop-loss", type=float, default=c.stop_loss)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qtrain)

    p = sub.add_parser("backtest", help="run strategies over the test half")
    p.add_argument("--dataset", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--ml-model")
    p.add_argument("--baseline-model")
    p.add_argument("--qweights")
    p.add_argument("--strategies", type=_names, default=list(ALL_STRATEGIES))
    p.add_argument("--cost", type=float, default=0.0, help="cost per unit of position change")
    p.add_argument("--no-online", action="store_true", help="freeze Q-learning weights during the test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("experiment", help="accuracy matrix over target x tweet set x model")
    p.add_argument("--prices", required=True)
    p.add_argument("--ticker-sentiment")
    p.add_argument("--product-sentiment")
    p.add_argument("--targets", type=_names, default=["alpha", "total"])
    p.add_argument("--tweet-sets", type=_names, default=["ticker", "product"])
    p.add_argument("--models", type=_names, default=["logreg", "svm", "baseline"])
    _add_grid_flags(p)
    _add_window_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summarize a backtest directory")
    p.add_argument("--backtest-dir", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split(sep, 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], ns: argparse.Namespace) -> argparse.Namespace:
    cfg = read_config(ns.config)
    sub = next(a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[ns.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key == "help":
            raise UsageError(f"config key {key!r} is not a flag of {ns.command!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)
    for a in subparser._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if ns.config:
            _require(ns.config)
            ns = _apply_config(parser, argv, ns)
        ns.func(ns)
    except UsageError as exc:
        print(f"sentitrade {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 1
        print(f"sentitrade {ns.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
