"""Command-line entry point.

Every artifact embeds a run manifest: the command, the resolved settings
(seed included) and hashes of the inputs. ``rerun ARTIFACT`` replays it.
Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text: str) -> List[str]:
    return [x.strip() for x in str(text).split(",") if x.strip()]


# (dest, required) per command; settings are everything else that is not plumbing
REQUIRED = {
    "lda-fit": ["corpus", "model_out", "annotation_out"],
    "grow": ["annotation", "out"],
    "simulate": ["stream_out", "truth_out"],
    "bench": ["out"],
    "report": ["reports", "model"],
}
INPUTS = {"lda-fit": ["corpus", "stopwords"], "grow": ["annotation"], "report": ["reports", "model"]}
OUTPUTS = {"lda-fit": ["model_out", "annotation_out"], "grow": ["out"], "simulate": ["stream_out", "truth_out"],
           "bench": ["out", "table_out"], "report": ["out"]}
RANDOMIZED = {"lda-fit", "grow", "simulate", "bench"}
PLUMBING = {"command", "config", "func"}


def build_parser():
    p = _Parser(prog="turbo-topics", description="Phrase-level topic summaries and collocation benchmarks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    def command(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="flat key=value file; flags override it")
        if name in RANDOMIZED:
            s.add_argument("--seed", type=int, help="random seed (generated and recorded when omitted)")
            s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        subs[name] = s
        return s

    s = command("lda-fit", "fit LDA and annotate every token with a topic")
    s.add_argument("--corpus", help="text file, one document per line")
    s.add_argument("--stopwords", help="stop-word file, one per line")
    s.add_argument("--min-doc-freq", type=int, default=20)
    s.add_argument("--topics", type=int, default=10)
    s.add_argument("--alpha", type=float, default=None, help="default 50/topics")
    s.add_argument("--eta", type=float, default=0.01)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--burn-in", type=int, default=500)
    s.add_argument("--top-words", type=int, default=20, help="words listed per topic in the model dump")
    s.add_argument("--model-out")
    s.add_argument("--annotation-out")

    s = command("grow", "grow significant phrases per topic from an annotation")
    s.add_argument("--annotation")
    s.add_argument("--topics", type=int, default=None, help="default: largest topic id + 1")
    s.add_argument("--p-threshold", type=float, default=0.01)
    s.add_argument("--permutations", type=int, default=100)
    s.add_argument("--max-phrase-len", type=int, default=5)
    s.add_argument("--min-count", type=int, default=2)
    s.add_argument("--top-words", type=int, default=30, help="seed words per topic")
    s.add_argument("--ties", choices=["strict", "inclusive"], default="strict")
    s.add_argument("--out")

    s = command("simulate", "draw a corpus with planted bigrams")
    s.add_argument("--crp-alpha", type=float, default=1000.0)
    s.add_argument("--beta-bigram", type=float, default=0.1)
    s.add_argument("--n-tokens", type=int, default=10000)
    s.add_argument("--stream-out")
    s.add_argument("--truth-out")

    s = command("bench", "score bigram tests on simulated corpora")
    s.add_argument("--methods", type=_names, default=None, help="comma-separated; default all")
    s.add_argument("--sizes", type=_ints, default=[1000, 10000])
    s.add_argument("--thresholds", type=_floats, default=[0.05, 0.01, 0.005])
    s.add_argument("--replications", type=int, default=5)
    s.add_argument("--permutations", type=int, default=1000)
    s.add_argument("--crp-alpha", type=float, default=1000.0)
    s.add_argument("--beta-bigram", type=float, default=0.1)
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--ties", choices=["strict", "inclusive"], default="strict")
    s.add_argument("--out", help="per-replication grid (CSV)")
    s.add_argument("--table-out", help="mean over replications (CSV)")

    s = command("report", "render unigram and phrase lists side by side")
    s.add_argument("--reports")
    s.add_argument("--model", help="model dump from lda-fit (unigram lists)")
    s.add_argument("--format", choices=["text", "html"], default="text")
    s.add_argument("--rows", type=int, default=10)
    s.add_argument("--out", help="default: standard output")

    s = sub.add_parser("rerun", help="replay the command recorded in an artifact")
    s.add_argument("artifact")
    subs["rerun"] = s
    return p, subs


def read_config(path: str) -> Dict[str, str]:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise DataError(f"cannot read config {path}: {e.strerror}") from None
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse(argv: List[str]):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("a command is required")
    if getattr(args, "config", None):
        sp = subs[args.command]
        known = {a.dest for a in sp._actions}
        values = read_config(args.config)
        bad = sorted(set(values) - known - {"config"})
        if bad:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(bad)}")
        sp.set_defaults(**values)
        args = parser.parse_args(argv)
    missing = [d for d in REQUIRED.get(args.command, []) if getattr(args, d, None) in (None, "")]
    if missing:
        raise UsageError("missing " + ", ".join("--" + d.replace("_", "-") for d in missing))
    return args


# -- manifests ---------------------------------------------------------------------


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def make_manifest(args) -> dict:
    cmd = args.command
    settings = {k: v for k, v in sorted(vars(args).items()) if k not in PLUMBING}
    inputs = {}
    for k in INPUTS.get(cmd, []):
        path = settings.get(k)
        if path:
            settings[k] = os.path.abspath(path)
            inputs[k] = sha256_file(path)
    for k in OUTPUTS.get(cmd, []):
        if settings.get(k):
            settings[k] = os.path.abspath(settings[k])
    return {"command": cmd, "settings": settings, "input_sha256": inputs, "version": __version__}


def extract_manifest(path: str) -> dict:
    """Manifest embedded in any artifact this tool writes."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    first = text.split("\n", 1)[0]
    if first.startswith("# manifest "):
        try:
            return json.loads(first[len("# manifest "):])
        except json.JSONDecodeError:
            raise DataError(f"{path}: unreadable manifest line") from None
    candidates = []
    if first.startswith("{"):
        candidates.append(first)
    candidates.append(text)
    for c in candidates:
        try:
            doc = json.loads(c)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict) and isinstance(doc.get("manifest"), dict):
            return doc["manifest"]
    marker = "<!-- manifest "
    if marker in text:
        return json.loads(text.split(marker, 1)[1].split(" -->", 1)[0])
    raise DataError(f"{path}: no manifest found")


def manifest_argv(m: dict) -> List[str]:
    argv = [m["command"]]
    for k, v in sorted(m["settings"].items()):
        if v is None:
            continue
        if isinstance(v, list):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        argv += ["--" + k.replace("_", "-"), str(v)]
    return argv


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


# -- commands ------------------------------------------------------------------------


def cmd_lda_fit(args, manifest):
    from .corpus import TokenizerConfig, build_vocabulary, read_lines, read_stopwords, save_stream, tokenize_corpus
    from .lda import LdaConfig, annotate_corpus, dumps_model, fit_lda

    docs = read_lines(args.corpus)
    stop = read_stopwords(args.stopwords) if args.stopwords else frozenset()
    tokens = tokenize_corpus(docs, TokenizerConfig())
    vocab = build_vocabulary(tokens, stop, args.min_doc_freq)
    cfg = LdaConfig(args.topics, args.alpha, args.eta, args.sweeps, args.burn_in, args.seed)
    state = fit_lda(tokens, vocab, cfg)
    _write(args.model_out, dumps_model(state, vocab, args.top_words, manifest) + "\n")
    save_stream(annotate_corpus(tokens, vocab, state), args.annotation_out, manifest)


def cmd_grow(args, manifest):
    from .corpus import load_stream
    from .growth import GrowthConfig, build_turbo_topics, dumps_reports

    annotated = load_stream(args.annotation)
    K = args.topics
    if K is None:
        K = 1 + max((a.topic for a in annotated if a.topic is not None), default=-1)
    cfg = GrowthConfig(args.p_threshold, args.permutations, args.max_phrase_len, args.min_count,
                       args.seed, args.top_words, args.ties == "strict")
    reports = build_turbo_topics(annotated, K, cfg, args.jobs)
    _write(args.out, dumps_reports(reports, manifest) + "\n")


def cmd_simulate(args, manifest):
    from .corpus import AnnotatedToken, Token, save_stream
    from .simulation import SimConfig, simulate_corpus

    truth = simulate_corpus(SimConfig(args.crp_alpha, args.beta_bigram, args.n_tokens, args.seed))
    words = truth.words()
    save_stream([AnnotatedToken(Token(w, 0, i)) for i, w in enumerate(words)], args.stream_out, manifest)
    doc = {"n_tokens": len(words), "vocabulary_size": truth.vocab_size,
           "true_bigrams": [[f"w{u}", f"w{v}", c] for (u, v), c in sorted(truth.true_bigrams.items())],
           "manifest": manifest}
    _write(args.truth_out, _dumps(doc))


def cmd_bench(args, manifest):
    from .discovery import METHODS
    from .simulation import BenchConfig, aggregate, grid_csv, run_benchmark

    methods = tuple(args.methods) if args.methods else METHODS
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method {bad[0]!r}; choose from {', '.join(METHODS)}")
    cfg = BenchConfig(methods, tuple(args.sizes), tuple(args.thresholds), args.replications, args.seed,
                      args.permutations, args.crp_alpha, args.beta_bigram, args.min_count, args.ties == "strict")
    rows = run_benchmark(cfg, args.jobs)
    head = ("manifest " + json.dumps(manifest, sort_keys=True) + "\n"
            "precision and recall weight each bigram by its occurrence count in the simulated stream")
    _write(args.out, grid_csv(rows, header_comment=head))
    if args.table_out:
        cols = ("method", "size", "threshold", "replications", "precision", "recall", "f")
        _write(args.table_out, grid_csv(aggregate(rows), cols, header_comment=head))


def cmd_report(args, manifest):
    from .growth import loads_reports
    from .report import baselines_from_model, render_html, render_text

    with open(args.reports, encoding="utf-8") as fh:
        try:
            reports, _ = loads_reports(fh.read())
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"{args.reports}: not a phrase-report file ({e})") from None
    with open(args.model, encoding="utf-8") as fh:
        try:
            baselines = baselines_from_model(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"{args.model}: not a model dump ({e})") from None
    if not reports:
        baselines = {}
    render = render_html if args.format == "html" else render_text
    text = render(reports, baselines, args.rows)
    if args.out:
        tag = json.dumps(manifest, sort_keys=True)
        text = (text.replace("</body></html>", f"<!-- manifest {tag} -->\n</body></html>")
                if args.format == "html" else f"# manifest {tag}\n" + text)
    _write(args.out, text)


COMMANDS = {"lda-fit": cmd_lda_fit, "grow": cmd_grow, "simulate": cmd_simulate,
            "bench": cmd_bench, "report": cmd_report}


def run(argv: List[str]) -> int:
    args = parse(argv)
    if args.command == "rerun":
        return run(manifest_argv(extract_manifest(args.artifact)))
    if args.command in RANDOMIZED and args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    manifest = make_manifest(args)
    COMMANDS[args.command](args, manifest)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    from .backoff import BackoffError
    from .corpus import CorpusError
    from .report import ReportMismatch

    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(argv)
    except UsageError as e:
        print(f"turbo-topics: usage error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (DataError, CorpusError, BackoffError, ReportMismatch) as e:
        print(f"turbo-topics: data error: {e}", file=sys.stderr)
        return DATA_ERROR
    except FileNotFoundError as e:
        print(f"turbo-topics: data error: no such file: {e.filename}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as e:
        print(f"turbo-topics: usage error: {e}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
