"""Command-line entry point.

Settings resolve in increasing precedence: built-in defaults, the
``config.json`` already in the output directory, the file given by
``--config`` (or $METAPATTERN_CONFIG), then individual flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import ConfigError, MetaPatternError
from .pipeline import CONFIG_ENV, STAGES, Inputs, PipelineConfig, Run, run_pipeline, run_stage
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("metapattern")

# flag -> config key
_OVERRIDES = {
    "min_sup": int, "max_len": int, "q_min": float, "delta": float, "tau": float, "theta": float,
    "gamma": float, "mode": str, "embedding_dim": int, "window": int, "seed": int, "n_trees": int,
    "clique_budget": int, "confidence": str, "stopwords": str, "ontology": str,
}
_BUNDLE = {"corpus": "corpus.txt", "labels": "labels.tsv", "pair_labels": "pair_labels.tsv",
           "catalog": "catalog.tsv", "assignments": "assignments.tsv", "gold": "gold.tsv"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    p.add_argument("--threads", type=int, default=1, help="worker processes for segmentation")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _run_args(p: argparse.ArgumentParser):
    _common(p)
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--data", help="directory written by `gen`; fills in any input not given explicitly")
    for name in _BUNDLE:
        p.add_argument("--" + name.replace("_", "-"))
    for key, typ in _OVERRIDES.items():
        p.add_argument("--" + key.replace("_", "-"), type=typ, dest=key)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metapattern", description="Typed textual pattern mining and EAV extraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write the synthetic benchmark corpus and its ground truth")
    _common(g)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=SyntheticSpec.seed)
    g.add_argument("--scale", type=float, default=1.0, help="multiply planted counts and token budget")
    g.add_argument("--noise", type=float, default=SyntheticSpec.noise_rate)

    helps = {
        "mine": "mine frequent pattern candidates",
        "train-q": "train the quality model on labelled patterns",
        "segment": "segment with feedback; write quality patterns and extractions",
        "group": "group synonymous patterns",
        "adjust": "adjust entity-type levels of groups",
        "extract": "assign attributes and write EAV tuples",
        "eval": "score EAV tuples against gold",
        "pipeline": "run every stage",
    }
    for name in (*STAGES, "pipeline"):
        _run_args(sub.add_parser(name, help=helps[name]))
    return parser


def _resolve(args) -> tuple[PipelineConfig, Inputs]:
    base = {}
    saved = os.path.join(args.out, "config.json")
    if os.path.exists(saved):
        with open(saved, encoding="utf-8") as fh:
            base = json.load(fh)
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        base.update(PipelineConfig.load(path).__dict__)
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    files = {k: getattr(args, k) for k in _BUNDLE}
    if args.data:
        for k, f in _BUNDLE.items():
            if files[k] is None and os.path.exists(os.path.join(args.data, f)):
                files[k] = os.path.join(args.data, f)
        onto = os.path.join(args.data, "ontology.tsv")
        if overrides["ontology"] is None and "ontology" not in base and os.path.exists(onto):
            overrides["ontology"] = onto
    if files["corpus"] is None:
        raise ConfigError("no corpus given (--corpus or --data)")
    return PipelineConfig.from_dict(base, **overrides), Inputs(**files)


def _cmd_gen(args):
    spec = SyntheticSpec.scaled(args.scale, seed=args.seed, noise_rate=args.noise)
    bundle = generate_synthetic(spec)
    paths = bundle.write(args.out)
    print(f"wrote {bundle.corpus.total_tokens} tokens in {len(bundle.corpus)} sentences to {paths['corpus']}")


def _cmd_run(args):
    config, inputs = _resolve(args)
    if args.command == "pipeline":
        metrics = run_pipeline(config, inputs, args.out, args.threads)
        if metrics is not None:
            sys.stdout.write(metrics.as_text())
        return
    run = Run(config, inputs, args.out, args.threads)
    run.write("config.json", config.to_json())
    out = run_stage(args.command, run)
    if args.command == "eval":
        sys.stdout.write(out.as_text())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            _cmd_gen(args)
        else:
            _cmd_run(args)
    except MetaPatternError as e:
        print(f"metapattern: error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"metapattern: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
