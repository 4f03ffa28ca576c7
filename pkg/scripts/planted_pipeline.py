"""Fit topics on a synthetic corpus with planted phrases, grow phrases, print the report.

Each planted phrase is marked with whether it shows up under the topic
whose top words come from the same generator.
"""

import argparse
import json
import tempfile
from pathlib import Path

from turbo_topics.cli import main as cli
from turbo_topics.simulation import PlantedConfig, planted_phrase_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=500)
    ap.add_argument("--topics", type=int, default=5)
    ap.add_argument("--permutations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workdir", help="keep artifacts here instead of a temp dir")
    args = ap.parse_args()

    work = Path(args.workdir or tempfile.mkdtemp(prefix="planted_"))
    work.mkdir(parents=True, exist_ok=True)
    docs, phrases, stops = planted_phrase_corpus(PlantedConfig(n_docs=args.docs, K=args.topics, seed=args.seed))
    (work / "docs.txt").write_text("\n".join(docs) + "\n")
    (work / "stops.txt").write_text("\n".join(stops) + "\n")
    f = lambda name: str(work / name)

    steps = [
        ["lda-fit", "--corpus", f("docs.txt"), "--stopwords", f("stops.txt"), "--topics", str(args.topics),
         "--min-doc-freq", "5", "--seed", str(args.seed), "--model-out", f("model.json"),
         "--annotation-out", f("ann.jsonl")],
        ["grow", "--annotation", f("ann.jsonl"), "--permutations", str(args.permutations),
         "--seed", str(args.seed), "--out", f("reports.json")],
        ["report", "--reports", f("reports.json"), "--model", f("model.json"), "--out", f("report.txt")],
    ]
    for argv in steps:
        print("turbo-topics", " ".join(argv), flush=True)
        if cli(argv) != 0:
            raise SystemExit(1)
    print((work / "report.txt").read_text())

    model = json.loads((work / "model.json").read_text())
    reports = {r["topic"]: {tuple(e["ngram"]) for e in r["entries"]}
               for r in json.loads((work / "reports.json").read_text())["reports"]}
    hit = 0
    for k, planted in enumerate(phrases):
        best = max(model["topics"], key=lambda t: sum(w.startswith(f"t{k}w") for w, _ in t["top_words"]))
        for p in planted:
            ok = p in reports[best["topic"]]
            hit += ok
            print(f"planted topic {k} -> fitted topic {best['topic']}: {' '.join(p):<22} {'found' if ok else 'missing'}")
    print(f"\n{hit}/{sum(map(len, phrases))} planted phrases recovered; artifacts in {work}")


if __name__ == "__main__":
    main()
