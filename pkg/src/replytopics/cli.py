"""Command-line pipeline driver.

Subcommands mirror the pipeline stages (ingest, train-lda, annotate,
train-predictors, evaluate, perplexity, describe-topics, serve, stats) plus
synthetic corpus generation.  A JSON config file may supply any pipeline
option; explicit flags override it.  Exit codes: 0 success, 2 usage error,
3 missing prerequisite.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import corpus, synth
from .pipeline import (MissingPrerequisiteError, Pipeline, PipelineConfig,
                       StaleArtifactError)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3


class SystemExit2(Exception):
    """Usage error carrying its message."""


def _add_pipeline_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--corpus", help="input corpus JSONL")
    sub.add_argument("--out-dir", help="artifact output directory")
    sub.add_argument("--config", help="JSON config file (flags override it)")
    sub.add_argument("--m-grid", help="comma-separated topic counts")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--sweeps", type=int)
    sub.add_argument("--min-customer", type=int)
    sub.add_argument("--min-agent", type=int)
    sub.add_argument("--t2-m", type=int)
    sub.add_argument("--t2-subsets", choices=["all", "full"])


def _pipeline_config(args) -> PipelineConfig:
    options: dict = {}
    if args.config:
        options.update(json.loads(open(args.config, encoding="utf-8").read()))
    overrides = {
        "corpus": args.corpus,
        "out_dir": args.out_dir,
        "seed": args.seed,
        "sweeps": args.sweeps,
        "min_customer": args.min_customer,
        "min_agent": args.min_agent,
        "t2_m": args.t2_m,
        "t2_subsets": args.t2_subsets,
    }
    if args.m_grid:
        overrides["m_grid"] = [int(m) for m in args.m_grid.split(",")]
    options.update({k: v for k, v in overrides.items() if v is not None})
    if "corpus" not in options or "out_dir" not in options:
        raise SystemExit2("--corpus and --out-dir are required "
                          "(via flag or config file)")
    return PipelineConfig.from_json(options)


def _cmd_stage(args, stage: str) -> int:
    pipeline = Pipeline(_pipeline_config(args))
    built = getattr(pipeline, stage)()
    print(f"{stage}: {'built' if built else 'up to date (skipped)'}")
    return EXIT_OK


def _cmd_run(args) -> int:
    pipeline = Pipeline(_pipeline_config(args))
    for stage in ("ingest", "train_lda", "annotate", "train_predictors",
                  "evaluate", "perplexity"):
        built = getattr(pipeline, stage)()
        print(f"{stage}: {'built' if built else 'up to date (skipped)'}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    params = json.loads(args.params) if args.params else {}
    try:
        pairs, oracle = synth.generate(args.profile, seed=args.seed, **params)
    except (synth.SynthError, TypeError) as exc:
        raise SystemExit2(f"invalid synthetic parameters: {exc}") from exc
    synth.write_corpus(pairs, oracle, args.output)
    print(f"wrote {len(pairs)} pairs to {args.output}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    pairs = corpus.ingest(args.corpus)
    print(corpus.format_stats(corpus.corpus_stats(pairs)))
    return EXIT_OK


def _cmd_describe_topics(args) -> int:
    pipeline = Pipeline(_pipeline_config(args))
    out = pipeline.describe_topics(M=args.t2_m, view=args.view)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, build_service

    config = ServiceConfig(models_dir=args.models_dir, M=args.m,
                           serve_burnin=args.serve_sweeps[0],
                           serve_samples=args.serve_sweeps[1],
                           cors_origins=tuple(args.cors_origin))
    try:
        app = build_service(config)
    except FileNotFoundError as exc:
        raise MissingPrerequisiteError(str(exc)) from exc
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replytopics",
        description="Topic-model pipeline for assisted email replies.")
    subs = parser.add_subparsers(dest="command", required=True)

    for stage, cmd in (("ingest", "ingest"), ("train_lda", "train-lda"),
                       ("annotate", "annotate"),
                       ("train_predictors", "train-predictors"),
                       ("evaluate", "evaluate"), ("perplexity", "perplexity")):
        sub = subs.add_parser(cmd, help=f"run the {cmd} stage")
        _add_pipeline_args(sub)
        sub.set_defaults(func=lambda a, s=stage: _cmd_stage(a, s))

    run = subs.add_parser("run", help="run every pipeline stage in order")
    _add_pipeline_args(run)
    run.set_defaults(func=_cmd_run)

    sy = subs.add_parser("synth", help="generate a synthetic corpus")
    sy.add_argument("profile", choices=sorted(synth.PROFILES))
    sy.add_argument("output", help="corpus JSONL path")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--params", help="JSON dict of generator parameters")
    sy.set_defaults(func=_cmd_synth)

    st = subs.add_parser("stats", help="print corpus statistics")
    st.add_argument("corpus", help="corpus JSONL path")
    st.set_defaults(func=_cmd_stats)

    dt = subs.add_parser("describe-topics",
                         help="write topic descriptors for one trained view")
    _add_pipeline_args(dt)
    dt.add_argument("--view", default="S")
    dt.set_defaults(func=_cmd_describe_topics)

    sv = subs.add_parser("serve", help="serve trained artifacts over HTTP")
    sv.add_argument("--models-dir", required=True,
                    help="pipeline output directory")
    sv.add_argument("--m", type=int, help="topic count to serve")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--serve-sweeps", type=int, nargs=2, default=(5, 3),
                    metavar=("BURNIN", "SAMPLES"))
    sv.add_argument("--cors-origin", action="append", default=["*"])
    sv.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingPrerequisiteError, StaleArtifactError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
