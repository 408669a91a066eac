"""Command-line driver for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 plugin failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from . import dataset as ds
from . import features as ft
from .errors import MtcError, PluginError
from .evaluation import report as rp
from .evaluation.plugins import ExternalPlugin, NativePlugin
from .evaluation.protocols import (
    run_cross_dataset,
    run_cv,
    run_incremental,
    run_zero_day,
)
from .synth import generate_planted_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PLUGIN = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    return int(os.environ.get("MTC_SEED", "0"))


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="rf",
                   help="dt | rf | extra | knn | external")
    p.add_argument("--trees", type=int, default=100, help="forest size")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--k-neighbors", type=int, default=3)
    p.add_argument("--exe", default=None,
                   help="external plugin command (with --model external)")
    p.add_argument("--arch", default=None, help="external architecture name")
    p.add_argument("--dual", action="store_true",
                   help="external plugin also receives packet-sequence tensors")
    p.add_argument("--repr", dest="repr_name", default="raw784",
                   choices=sorted(ft.EXTRACTORS))
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--jobs", type=int, default=1, help="worker cap (reserved)")


def _make_plugin(args):
    if args.model == "external":
        if not args.exe or not args.arch:
            raise SystemExit(EXIT_USAGE)
        return ExternalPlugin(args.exe.split(), args.arch, needs_aux=args.dual)
    params = {}
    if args.model in ("rf", "extra"):
        params = {"n_trees": args.trees, "max_depth": args.max_depth}
    elif args.model == "dt":
        params = {"max_depth": args.max_depth}
    elif args.model == "knn":
        params = {"k": args.k_neighbors}
    return NativePlugin(args.model, **params)


def _model_config(args) -> dict:
    return {
        "model": args.model,
        "repr": args.repr_name,
        "trees": args.trees,
        "max_depth": args.max_depth,
        "k_neighbors": args.k_neighbors,
        "exe": args.exe,
        "arch": args.arch,
        "seed": args.seed,
    }


def build_parser() -> _Parser:
    parser = _Parser(prog="mtc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse manifest captures into a corpus store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tcp-timeout", type=float, default=300.0)
    p.add_argument("--udp-timeout", type=float, default=300.0)

    p = sub.add_parser("preprocess", help="apply payload/noise/family filters and balancing")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-payload", type=int, default=ds.MIN_PAYLOAD_DEFAULT)
    p.add_argument("--no-noise-filter", action="store_true")
    p.add_argument("--min-family", type=int, default=0,
                   help="drop malware families smaller than this (0 = keep all)")
    p.add_argument("--balance", action="store_true")
    p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("stats", help="print corpus counts and TLS share")
    p.add_argument("--in", dest="inp", required=True)

    p = sub.add_parser("featurize", help="extract tensors into an FTNS file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--repr", dest="repr_name", required=True,
                   choices=sorted(ft.EXTRACTORS))
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--deepmal-m", type=int, default=ft.DEEPMAL_DEFAULT_M)
    p.add_argument("--deepmal-n", type=int, default=ft.DEEPMAL_DEFAULT_N)
    p.add_argument("--pktseq-p", type=int, default=ft.PKTSEQ_DEFAULT_P)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    ev = p.add_subparsers(dest="protocol", required=True)

    c = ev.add_parser("cv", help="stratified k-fold cross-validation")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--task", choices=["binary", "family"], default="binary")
    c.add_argument("--k", type=int, default=5)
    c.add_argument("--out", default=None)
    _add_model_args(c)

    c = ev.add_parser("zero-day", help="leave-one-family-out detection")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--family", required=True)
    c.add_argument("--include-benign-test", action="store_true")
    c.add_argument("--out", default=None)
    _add_model_args(c)

    c = ev.add_parser("incremental", help="accuracy while families are added")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--order", required=True, help="comma-separated family order")
    c.add_argument("--task", choices=["binary", "family"], default="binary")
    c.add_argument("--k", type=int, default=5)
    c.add_argument("--out", default=None)
    _add_model_args(c)

    c = ev.add_parser("cross", help="train on one corpus, test a family of another")
    c.add_argument("--train", required=True)
    c.add_argument("--test", required=True)
    c.add_argument("--family", required=True,
                   help="family name, or trainName,testName alias pair")
    c.add_argument("--out", default=None)
    _add_model_args(c)

    p = sub.add_parser("report", help="render a stored report")
    p.add_argument("--in", dest="inp", required=True)

    p = sub.add_parser("synth", help="generate the planted-signal capture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--sessions-per-class", type=int, default=400)
    p.add_argument("--seed", type=int, default=7)

    return parser


def _emit(args, body: dict) -> None:
    if getattr(args, "out", None):
        rp.write_report(args.out, body)
    print(rp.render_report({"body": body}))


def _cmd_ingest(args) -> int:
    manifest = ds.load_manifest(args.manifest)
    corpus = ds.build_corpus(manifest, args.tcp_timeout, args.udp_timeout)
    ds.save_corpus(corpus, args.out)
    print(f"ingested {len(corpus)} sessions from {len(manifest.entries)} captures")
    return EXIT_OK


def _cmd_preprocess(args) -> int:
    corpus = ds.load_corpus(args.inp)
    n0 = len(corpus)
    corpus = ds.filter_min_payload(corpus, args.min_payload)
    tally = {}
    if not args.no_noise_filter:
        corpus, tally = ds.filter_noise(corpus)
    if args.min_family:
        corpus = ds.min_family_filter(corpus, args.min_family)
    if args.balance:
        corpus = ds.balance_benign_malware(corpus, args.seed)
    ds.save_corpus(corpus, args.out)
    print(f"{n0} -> {len(corpus)} sessions")
    for rule, n in tally.items():
        if n:
            print(f"  removed {n} by rule {rule}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    corpus = ds.load_corpus(args.inp)
    stats = corpus.stats()
    print(f"dataset: {corpus.dataset_name} ({len(corpus)} sessions)")
    for label in sorted(stats.label_counts):
        share = stats.tls_share[label]
        print(
            f"  {label:<8} {stats.label_counts[label]:>7}  "
            f"TLS {share:6.2%}  non-TLS {1 - share:6.2%}"
        )
    for fam in sorted(stats.family_counts):
        print(f"  family {fam:<16} {stats.family_counts[fam]}")
    return EXIT_OK


def _cmd_featurize(args) -> int:
    corpus = ds.load_corpus(args.inp)
    kwargs = {}
    if args.repr_name == "deepmal":
        kwargs = {"m": args.deepmal_m, "n": args.deepmal_n}
    elif args.repr_name == "pktseq":
        kwargs = {"p": args.pktseq_p}
    tensors = [ft.extract(s.session, args.repr_name, **kwargs) for s in corpus.sessions]
    labels = [(s.hex_id, s.label, s.family) for s in corpus.sessions]
    ft.write_tensor_file(tensors, labels, args.out, args.labels)
    print(f"wrote {len(tensors)} {args.repr_name} tensors to {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    plugin = _make_plugin(args)
    config = _model_config(args)
    if args.protocol == "cv":
        corpus = ds.load_corpus(args.inp)
        config.update({"task": args.task, "k": args.k, "corpus": corpus.dataset_name})
        fp = rp.config_fingerprint(config)
        folds, mean = run_cv(
            corpus, plugin, repr_name=args.repr_name, task=args.task,
            k=args.k, seed=args.seed, fingerprint=fp,
        )
        _emit(args, rp.report_body("cv", config, args.seed, mean=mean, folds=folds))
    elif args.protocol == "zero-day":
        corpus = ds.load_corpus(args.inp)
        config.update({"family": args.family, "corpus": corpus.dataset_name})
        acc = run_zero_day(
            corpus, plugin, repr_name=args.repr_name, family=args.family,
            seed=args.seed, include_benign_test=args.include_benign_test,
        )
        _emit(args, rp.report_body("zero-day", config, args.seed,
                                   extra={"family": args.family, "accuracy": acc}))
    elif args.protocol == "incremental":
        corpus = ds.load_corpus(args.inp)
        order = [f for f in args.order.split(",") if f]
        config.update({"order": order, "task": args.task, "k": args.k,
                       "corpus": corpus.dataset_name})
        accs = run_incremental(
            corpus, plugin, repr_name=args.repr_name, family_order=order,
            task=args.task, k=args.k, seed=args.seed,
        )
        _emit(args, rp.report_body("incremental", config, args.seed,
                                   extra={"family_order": order, "accuracies": accs}))
    else:  # cross
        train = ds.load_corpus(args.train)
        test = ds.load_corpus(args.test)
        fam = tuple(args.family.split(",")) if "," in args.family else args.family
        config.update({"family": args.family, "train": train.dataset_name,
                       "test": test.dataset_name})
        acc = run_cross_dataset(
            train, test, plugin, repr_name=args.repr_name, family=fam, seed=args.seed
        )
        _emit(args, rp.report_body("cross-dataset", config, args.seed,
                                   extra={"family": args.family, "accuracy": acc}))
    return EXIT_OK


def _cmd_report(args) -> int:
    print(rp.render_report(rp.read_report(args.inp)))
    return EXIT_OK


def _cmd_synth(args) -> int:
    manifest = generate_planted_corpus(
        args.out, sessions_per_class=args.sessions_per_class, seed=args.seed
    )
    print(manifest)
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "preprocess": _cmd_preprocess,
    "stats": _cmd_stats,
    "featurize": _cmd_featurize,
    "eval": _cmd_eval,
    "report": _cmd_report,
    "synth": _cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except PluginError as exc:
        print(f"plugin failure: {exc}", file=sys.stderr)
        return EXIT_PLUGIN
    except MtcError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
