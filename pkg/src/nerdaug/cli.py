"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.  Every subcommand reads
and validates all inputs before it writes anything.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .augment import AugmentationConfig, Method, Resources, augment_corpus, format_provenance, parse_methods
from .corpus import Corpus, low_resource_subset, parse_conll_report, serialize_conll
from .errors import NerAugError
from .evaluation import fix_analysis, format_grid, grid_search, method_name, run_low_resource_experiment, span_f1
from .resources import corpus_stats, read_lexicon
from .synthetic import generate_splits
from . import tagger

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path, text: str) -> None:
    """Write atomically so a failure never leaves a partial file behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _read_corpus(path, lenient: bool = False) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    corpus, repairs = parse_conll_report(text, strict=not lenient, source=str(path))
    for r in repairs:
        print(f"{path}:{r.line}: repaired {r.original} -> {r.repaired}", file=sys.stderr)
    return corpus


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"p must lie in [0, 1], got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _methods_arg(values) -> tuple[Method, ...]:
    try:
        methods = parse_methods(",".join(values or []))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not methods:
        raise UsageError("at least one --method is required")
    return methods


def _lexicon_for(methods, path):
    if Method.SR in methods and not path:
        raise UsageError("synonym replacement needs --lexicon")
    return read_lexicon(path) if path else None


def cmd_stats(args) -> int:
    stats = corpus_stats(_read_corpus(args.corpus, args.lenient))
    if args.json:
        _write(args.json, stats.to_json())
    sys.stdout.write(stats.format_table())
    return 0


def cmd_subset(args) -> int:
    subset = low_resource_subset(_read_corpus(args.input, args.lenient), args.n)
    _write(args.output, serialize_conll(subset))
    print(f"wrote {len(subset)} mention-bearing sentences to {args.output}")
    return 0


def cmd_resources(args) -> int:
    corpus = _read_corpus(args.train, args.lenient)
    res = Resources.from_corpus(corpus)
    doc = {"token_distribution": res.distribution.to_dict(), "mention_inventory": res.inventory.to_dict()}
    _write(args.output, json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    print(f"{len(doc['token_distribution'])} labels, {len(doc['mention_inventory'])} entity types")
    return 0


def cmd_augment(args) -> int:
    methods = _methods_arg(args.method)
    lexicon = _lexicon_for(methods, args.lexicon)
    corpus = _read_corpus(args.input, args.lenient)
    config = AugmentationConfig(methods, args.p, args.copies, args.seed, keep_originals=not args.no_originals)
    out, records = augment_corpus(corpus, config, Resources.from_corpus(corpus, lexicon), workers=args.workers)
    provenance = args.provenance or f"{args.output}.provenance.jsonl"
    _write(args.output, serialize_conll(out))
    _write(provenance, format_provenance(len(corpus), records, config.keep_originals))
    print(f"input sentences: {len(corpus)}")
    print(f"output sentences: {len(out)}")
    for m in config.methods:
        print(f"  {m.value}: {sum(r.method is m for r in records)}")
    return 0


def cmd_train(args) -> int:
    corpus = _read_corpus(args.train, args.lenient)
    model = tagger.train(corpus, args.epochs, args.seed)
    _write(args.model, tagger.dumps_model(model))
    print(f"trained on {len(corpus)} sentences, {len(model.features)} features, {len(model.label_set)} labels")
    return 0


def cmd_tag(args) -> int:
    model = tagger.load_model(args.model)
    corpus = _read_corpus(args.input, lenient=True)
    tagged = tagger.tag_corpus(model, corpus)
    _write(args.output, serialize_conll(tagged))
    print(f"tagged {len(tagged)} sentences")
    return 0


def cmd_evaluate(args) -> int:
    report = span_f1(_read_corpus(args.gold, args.lenient), _read_corpus(args.predicted, lenient=True))
    if args.json:
        _write(args.json, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    sys.stdout.write(report.format_table())
    return 0


def cmd_grid(args) -> int:
    methods = _methods_arg(args.method)
    lexicon = _lexicon_for(methods, args.lexicon)
    train = _read_corpus(args.train, args.lenient)
    dev = _read_corpus(args.dev, args.lenient)
    best, points = grid_search(
        train, dev, methods, Resources.from_corpus(train, lexicon),
        seed=args.seed, epochs=args.epochs, workers=args.workers,
    )
    doc = {"methods": method_name(methods), "best": best.to_dict(), "points": [g.to_dict() for g in points]}
    if args.json:
        _write(args.json, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(format_grid(points, best))
    return 0


def cmd_fixes(args) -> int:
    gold = _read_corpus(args.gold, args.lenient)
    baseline = _read_corpus(args.baseline, lenient=True)
    runs = [_read_corpus(p, lenient=True) for p in args.augmented]
    analysis = fix_analysis(gold, baseline, runs)
    if args.json:
        _write(args.json, json.dumps(analysis.to_dict(), indent=2, sort_keys=True) + "\n")
    sys.stdout.write(analysis.format_table())
    return 0


def cmd_synth(args) -> int:
    out = Path(args.output_dir)
    splits = generate_splits(args.train_size, args.dev_size, args.test_size, seed=args.seed)
    for name, corpus in zip(("train", "dev", "test"), splits):
        _write(out / f"{name}.conll", serialize_conll(corpus))
        print(f"{name}: {len(corpus)} sentences")
    return 0


EXPERIMENT_KEYS = {
    "train": str, "dev": str, "test": str, "lexicon": str,
    "sizes": str, "methods": str, "seeds": str,
    "epochs": int, "workers": int, "output": str, "table": str,
}
EXPERIMENT_DEFAULTS = {
    "sizes": "50,150,500", "methods": "lwtr,sr,mr,sis,all", "seeds": "1,2,3,4,5",
    "epochs": 5, "workers": 1,
}
_PATH_KEYS = ("train", "dev", "test", "lexicon", "output", "table")


def load_config(path) -> dict:
    """Read ``key = value`` lines; relative paths resolve against the file's folder."""
    base = Path(path).parent
    config = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in EXPERIMENT_KEYS:
                raise UsageError(f"{path}:{lineno}: expected key = value with a known key, got {line!r}")
            value = value.strip()
            try:
                value = EXPERIMENT_KEYS[key](value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
            if key in _PATH_KEYS and not Path(value).is_absolute():
                value = str(base / value)
            config[key] = value
    return config


def cmd_experiment(args) -> int:
    settings = dict(EXPERIMENT_DEFAULTS)
    if args.config:
        settings.update(load_config(args.config))
    for key in EXPERIMENT_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for key in ("train", "dev", "test", "output"):
        if not settings.get(key):
            raise UsageError(f"experiment needs --{key} (or '{key} = ...' in the config file)")
    if settings["workers"] < 1 or settings["epochs"] < 0:
        raise UsageError("workers must be positive and epochs non-negative")
    sizes = _int_list(settings["sizes"])
    seeds = _int_list(settings["seeds"])
    if not sizes or not seeds:
        raise UsageError("sizes and seeds must be non-empty")
    try:
        method_sets = [parse_methods(m) for m in str(settings["methods"]).split(",") if m.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    needs_sr = any(Method.SR in m for m in method_sets)
    lexicon = _lexicon_for((Method.SR,) if needs_sr else (), settings.get("lexicon"))

    train = _read_corpus(settings["train"])
    dev = _read_corpus(settings["dev"])
    test = _read_corpus(settings["test"])
    report = run_low_resource_experiment(
        train, dev, test, sizes, method_sets, seeds,
        lexicon=lexicon, epochs=settings["epochs"], workers=settings["workers"],
    )
    table = report.format_table()
    _write(settings["output"], report.to_json())
    if settings.get("table"):
        _write(settings["table"], table)
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nerdaug", description="Data augmentation for NER corpora in CoNLL format.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def lenient(p):
        p.add_argument("--lenient", action="store_true", help="repair orphan I- labels instead of failing")

    p = sub.add_parser("stats", help="descriptive corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--json", help="write the statistics as JSON")
    lenient(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("subset", help="first N sentences containing a mention")
    p.add_argument("--n", type=_non_negative, required=True)
    p.add_argument("input")
    p.add_argument("output")
    lenient(p)
    p.set_defaults(func=cmd_subset)

    p = sub.add_parser("resources", help="dump token distribution and mention inventory")
    p.add_argument("train")
    p.add_argument("output")
    lenient(p)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("augment", help="augment a training corpus")
    p.add_argument("--method", action="append", required=True,
                   help="lwtr, sr, mr, sis or all; repeat or comma-separate")
    p.add_argument("--p", type=_probability, required=True, help="replace/shuffle probability")
    p.add_argument("--copies", type=_positive, default=1, help="augmented copies per sentence and method")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon", help="synonym file (lemma<TAB>synonym), required for sr")
    p.add_argument("--no-originals", action="store_true", help="write augmented sentences only")
    p.add_argument("--provenance", help="sidecar path (default: OUTPUT.provenance.jsonl)")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("input")
    p.add_argument("output")
    lenient(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train the baseline tagger")
    p.add_argument("--epochs", type=_non_negative, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("train")
    p.add_argument("model")
    lenient(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="label a corpus with a trained model")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("evaluate", help="span-level micro F1")
    p.add_argument("gold")
    p.add_argument("predicted")
    p.add_argument("--json")
    lenient(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="tune p and copies on a dev set")
    p.add_argument("--method", action="append", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=_non_negative, default=5)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--json")
    p.add_argument("train")
    p.add_argument("dev")
    lenient(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("experiment", help="full low-resource protocol")
    p.add_argument("--config", help="key = value file; flags override it")
    for key in ("train", "dev", "test", "lexicon", "output", "table"):
        p.add_argument(f"--{key}")
    p.add_argument("--sizes", help="comma-separated subset sizes (default 50,150,500)")
    p.add_argument("--methods", help="comma-separated methods; 'all' is the combination")
    p.add_argument("--seeds", help="comma-separated seeds (default 1,2,3,4,5)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("fixes", help="which baseline errors augmented runs fix")
    p.add_argument("gold")
    p.add_argument("baseline")
    p.add_argument("augmented", nargs="+")
    p.add_argument("--json")
    lenient(p)
    p.set_defaults(func=cmd_fixes)

    p = sub.add_parser("synth", help="write synthetic train/dev/test splits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-size", type=_non_negative, default=400)
    p.add_argument("--dev-size", type=_non_negative, default=150)
    p.add_argument("--test-size", type=_non_negative, default=150)
    p.add_argument("output_dir")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"nerdaug: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NerAugError, OSError, UnicodeDecodeError) as exc:
        print(f"nerdaug: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
