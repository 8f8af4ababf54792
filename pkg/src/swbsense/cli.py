"""Command-line entry point: ``swbsense {generate,extract,train,sweep,analyze,report}``.

Settings resolve as built-in defaults < ``--config file.json`` < flags.
The seed falls back to ``$SWB_SEED`` when neither the flags nor the config set it.

Exit codes: 0 ok, 1 usage, 2 data or validation error, 3 non-convergence
under ``--strict``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .corpus import ABBREVIATIONS, DIMENSIONS, load_dataset, write_dataset
from .evaluation import (DEFAULT_COMBOS, SweepReport, age_correlations, feature_correlations, group_ttest,
                         label_table, render_text, run_sweep)
from .evaluation.stats import GROUPINGS
from .features import (FAMILIES, FeatureRegistry, WindowSpec, build_matrix, family_label, fit_normalization,
                       apply_normalization, normalize_values, parse_families, write_matrix_csv, write_params_json)
from .lexicon import load_demo_lexicon, parse_lexicon
from .regressors import ALGORITHMS, Hyperparameters, RegressionProblem, fit_model
from .synth import GeneratorConfig, demo_config, generate_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3

DEFAULTS = {
    "seed": 0,
    "folds": 5,
    "before_days": 7.0,
    "after_days": 7.0,
    "lexicon": None,
    "families": None,
    "algorithms": ",".join(ALGORITHMS),
    "set": [],
    "svr_kernel": None,
    "jobs": 1,
    "strict": False,
    "out_dir": ".",
    "n": None,
    "noise_sd": None,
    "paper_marginals": False,
    "generator_config": None,
    "normalize": False,
    "algorithm": "stepwise",
    "dimension": None,
}


class UsageError(Exception):
    pass


class NonConvergence(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, *, lexicon=True, window=True, seed=True):
    p.add_argument("--config", help="JSON file whose keys overlay the defaults (flags still win)")
    if seed:
        p.add_argument("--seed", type=int, help="RNG seed (fallback: $SWB_SEED, then 0)")
    if lexicon:
        p.add_argument("--lexicon", help=".dic lexicon path, or 'demo' for the bundled one")
    if window:
        p.add_argument("--before-days", type=float, help="window length before the survey (default 7)")
        p.add_argument("--after-days", type=float, help="window length after the survey (default 7)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swbsense", description="Well-being sensing from social-media user records.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic corpus")
    _common(p, lexicon=False, window=False)
    p.add_argument("--out", required=True, help="output .jsonl path")
    p.add_argument("--n", type=int, help="number of users")
    p.add_argument("--paper-marginals", action="store_true", default=None,
                   help="draw gender and living place with the reference marginal shares")
    p.add_argument("--noise-sd", type=float, help="label noise sd in label points")
    p.add_argument("--generator-config", help="generator JSON (default: the bundled demo config)")

    p = sub.add_parser("extract", help="write the feature matrix CSV and normalization JSON")
    _common(p, seed=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--families", help="e.g. D,B,L (default all three)")
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--params-out", help="normalization JSON path (default: <out>.norm.json)")
    p.add_argument("--normalize", action="store_true", default=None, help="write min-max normalized values")

    p = sub.add_parser("train", help="fit one model on all rows")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--families", help="e.g. D,B,L (default all three)")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--dimension", choices=DIMENSIONS, required=True)
    p.add_argument("--set", action="append", metavar="ALGO.PARAM=VALUE", help="hyperparameter override")
    p.add_argument("--svr-kernel", choices=("rbf", "linear"))
    p.add_argument("--strict", action="store_true", default=None, help="exit 3 if the solver did not converge")
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("sweep", help="cross-validate every dimension x feature set x algorithm cell")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--families", help="comma-separated feature sets, e.g. D,D+B,D+B+L (default all 7)")
    p.add_argument("--algorithms", help="comma-separated subset of " + ",".join(ALGORITHMS))
    p.add_argument("--folds", type=int)
    p.add_argument("--set", action="append", metavar="ALGO.PARAM=VALUE", help="hyperparameter override")
    p.add_argument("--svr-kernel", choices=("rbf", "linear"))
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--strict", action="store_true", default=None, help="exit 3 if any cell did not converge")
    p.add_argument("--out-dir", help="directory for report.json and report.txt")

    p = sub.add_parser("analyze", help="feature-label correlations, group t-tests and age correlations")
    _common(p, seed=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--families", help="feature families to correlate (default D,B plus L with a lexicon)")
    p.add_argument("--out", required=True, help="analysis JSON path")

    p = sub.add_parser("report", help="re-render a saved report.json as text")
    p.add_argument("report", help="report.json path")
    p.add_argument("--out", help="text output path (default stdout)")
    return parser


# -- settings -----------------------------------------------------------------

def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the --config file and explicit flags."""
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise UsageError(f"{args.config}: config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = dict(DEFAULTS)
    out.update(cfg)
    for k, v in vars(args).items():
        if v is not None:
            out[k] = v
    if getattr(args, "seed", None) is None and "seed" not in cfg:
        env = os.environ.get("SWB_SEED")
        if env is not None:
            try:
                out["seed"] = int(env)
            except ValueError:
                raise UsageError(f"SWB_SEED must be an integer, got {env!r}") from None
    if out["folds"] < 2:
        raise UsageError("--folds must be at least 2")
    if out["before_days"] < 0 or out["after_days"] < 0:
        raise UsageError("window days must be non-negative")
    if out["jobs"] < 1:
        raise UsageError("--jobs must be at least 1")
    return out


def _window(s: dict) -> WindowSpec:
    return WindowSpec.days(s["before_days"], s["after_days"])


def _lexicon(s: dict):
    if s["lexicon"] is None:
        return None
    return load_demo_lexicon() if s["lexicon"] == "demo" else parse_lexicon(s["lexicon"])


def _families(s: dict, lexicon) -> tuple:
    fams = parse_families(s["families"]) if s["families"] else FAMILIES
    if "L" in fams and lexicon is None:
        raise UsageError("linguistic features (L) need a lexicon: pass --lexicon PATH or --lexicon demo")
    return fams


def _hyper(s: dict) -> Hyperparameters:
    overrides = {}
    items = s["set"]
    if isinstance(items, dict):
        items = [f"{k}={v}" for k, v in items.items()]
    for item in items:
        key, eq, value = str(item).partition("=")
        if not eq:
            raise UsageError(f"--set expects ALGO.PARAM=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    if s["svr_kernel"]:
        overrides["svr.kernel"] = s["svr_kernel"]
    try:
        return Hyperparameters().with_overrides(overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _clean(obj):
    """NaN/inf -> null for strict JSON."""
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=1, sort_keys=True, ensure_ascii=False, allow_nan=False)
        fh.write("\n")


# -- commands -----------------------------------------------------------------

def cmd_generate(s: dict) -> int:
    cfg = GeneratorConfig.load(s["generator_config"]) if s["generator_config"] else demo_config()
    over = {}
    if s["n"] is not None:
        over["n_users"] = s["n"]
    if s["noise_sd"] is not None:
        over["noise_sd"] = s["noise_sd"]
    if s["paper_marginals"]:
        over["paper_marginals"] = True
    cfg = GeneratorConfig(**{**cfg.__dict__, **over})
    ds = generate_corpus(cfg, s["seed"])
    write_dataset(ds, s["out"])
    print(f"wrote {len(ds)} records to {s['out']}")
    return EXIT_OK


def cmd_extract(s: dict) -> int:
    lex = _lexicon(s)
    fams = _families(s, lex)
    ds = load_dataset(s["dataset"])
    matrix = build_matrix(ds, fams, _window(s), lex)
    params = fit_normalization(matrix) if len(ds) else None
    if s["normalize"] and params is not None:
        matrix = apply_normalization(matrix, params)
    write_matrix_csv(matrix, s["out"])
    params_out = s.get("params_out") or str(s["out"]) + ".norm.json"
    if params is not None:
        write_params_json(params, params_out)
    print(f"wrote {matrix.shape[0]} rows x {matrix.shape[1]} features ({family_label(fams)}) to {s['out']}")
    return EXIT_OK


def cmd_train(s: dict) -> int:
    lex = _lexicon(s)
    fams = _families(s, lex)
    hp = _hyper(s)
    ds = load_dataset(s["dataset"])
    matrix = build_matrix(ds, fams, _window(s), lex)
    params = fit_normalization(matrix)
    problem = RegressionProblem(normalize_values(matrix.values, params), ds.label_column(s["dimension"]),
                                matrix.columns)
    model = fit_model(s["algorithm"], problem, hp, seed=s["seed"])
    if s["strict"] and not model.converged:
        raise NonConvergence(f"{s['algorithm']} did not converge on {s['dimension']}")
    bundle = {"dimension": s["dimension"], "families": family_label(fams), "window": _window(s).to_json(),
              "normalization": params.to_json(), "model": model.to_json()}
    _write_json(bundle, s["out"])
    print(f"{s['algorithm']} on {s['dimension']}: {len(model.features)} features -> {s['out']}")
    return EXIT_OK


def cmd_sweep(s: dict) -> int:
    lex = _lexicon(s)
    combos = [c.strip() for c in str(s["families"]).split(",") if c.strip()] if s["families"] else list(DEFAULT_COMBOS)
    try:
        combos = list(dict.fromkeys(family_label(c) for c in combos))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if any("L" in parse_families(c) for c in combos) and lex is None:
        raise UsageError("linguistic features (L) need a lexicon: pass --lexicon PATH or --lexicon demo")
    algorithms = [a.strip() for a in str(s["algorithms"]).split(",") if a.strip()]
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad or not algorithms:
        raise UsageError(f"unknown algorithms {bad}; expected a subset of {','.join(ALGORITHMS)}")
    hp = _hyper(s)
    ds = load_dataset(s["dataset"])
    report = run_sweep(ds, combos, algorithms, hp, _window(s), lex, s["seed"], s["folds"], jobs=s["jobs"])
    stalled = [c for c in report.cells if not c.converged]
    if s["strict"] and stalled:
        c = stalled[0]
        raise NonConvergence(f"{len(stalled)} cell(s) did not converge, first: {c.dimension} / {c.families} / "
                             f"{c.algorithm}")
    out = Path(s["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    # single writer, after every cell is done
    (out / "report.json").write_text(report.dumps(), encoding="utf-8")
    (out / "report.txt").write_text(render_text(report), encoding="utf-8")
    for d, c in report.best().items():
        if c is None:
            print(f"{ABBREVIATIONS[d]:<5} all cells degenerate")
        else:
            print(f"{ABBREVIATIONS[d]:<5} gamma={c.gamma_pooled:.3f}  {c.families} / {c.algorithm}")
    print(f"wrote {len(report.cells)} cells to {out / 'report.json'}")
    return EXIT_OK


def analyze(ds, matrix) -> dict:
    labels = label_table(ds)
    ttests = {g: {d: group_ttest(ds, g, d).to_json() for d in DIMENSIONS} for g in GROUPINGS}
    return {
        "n_users": len(ds),
        "families": family_label(matrix.families),
        "groupings": {g: {"a": a, "b": b} for g, (_, a, b) in GROUPINGS.items()},
        "label_means": {d: float(labels[:, k].mean()) for k, d in enumerate(DIMENSIONS)},
        "feature_correlations": feature_correlations(matrix, labels),
        "ttests": ttests,
        "age_correlations": age_correlations(ds),
    }


def cmd_analyze(s: dict) -> int:
    lex = _lexicon(s)
    if s["families"]:
        fams = _families(s, lex)
    else:
        fams = FAMILIES if lex is not None else ("D", "B")
    ds = load_dataset(s["dataset"])
    if len(ds) < 4:
        raise ValueError("analysis needs at least 4 records")
    result = analyze(ds, build_matrix(ds, fams, _window(s), lex))
    _write_json(result, s["out"])
    for g, rows in result["ttests"].items():
        hits = [ABBREVIATIONS[d] for d, r in rows.items() if r["p"] < 0.005]
        print(f"{g}: p < 0.005 on {', '.join(hits) if hits else 'no dimension'}")
    print(f"wrote analysis of {len(ds)} users to {s['out']}")
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = SweepReport.loads(fh.read())
    text = render_text(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "extract": cmd_extract, "train": cmd_train, "sweep": cmd_sweep,
            "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args)
        return COMMANDS[args.command](resolve(args))
    except UsageError as exc:
        print(f"swbsense {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergence as exc:
        print(f"swbsense {args.command}: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValueError, KeyError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"swbsense {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
