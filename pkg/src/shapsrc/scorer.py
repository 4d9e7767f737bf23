"""Reference scorer process for the external oracle protocol.

Serves the built-in classifiers over stdin/stdout, so an ``external`` run
can be checked against a ``naive-count`` run on the same corpora::

    python -m shapsrc.scorer --source en=en.jsonl --source de=de.jsonl --target fr=fr.jsonl

Source and target names must match the ones announced in the handshake.
"""

from __future__ import annotations

import argparse
import json
import sys

from .game import InvalidInputError, make_source_ids
from .oracle import KINDS, BuiltinOracle, SourceCorpus, TargetCorpus, load_jsonl
from .sampler import TrainBundle


def _pairs(items):
    out = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not name:
            raise SystemExit(f"expected NAME=PATH, got {item!r}")
        out[name] = load_jsonl(path)
    return out


def serve(sources: dict, targets: dict, kind: str, stdin=sys.stdin, stdout=sys.stdout) -> None:
    names = list(sources)
    corpora = [SourceCorpus(sid, sources[sid.name]) for sid in make_source_ids(names)]
    by_name = {c.name: c for c in corpora}
    oracles: dict[tuple, BuiltinOracle] = {}
    for line in stdin:
        msg = json.loads(line)
        if "hello" in msg:
            ok = set(msg["sources"]) <= set(by_name) and set(msg["targets"]) <= set(targets)
            stdout.write(json.dumps({"ok": ok, "score_range": [0.0, 1.0]}) + "\n")
            stdout.flush()
            continue
        try:
            wanted = tuple(msg["targets"])
            if wanted not in oracles:
                oracles[wanted] = BuiltinOracle(corpora, [TargetCorpus(t, targets[t]) for t in wanted], kind)
            oracle = oracles[wanted]
            if msg["train"]:
                bundle = TrainBundle(tuple((by_name[e["source"]].id.index, tuple(e["indices"]))
                                           for e in msg["train"]))
                scores = oracle.train_and_score(bundle)
            else:
                scores = oracle.empty_score()
            reply = {"id": msg["id"], "scores": [float(s) for s in scores]}
        except (InvalidInputError, KeyError, IndexError) as exc:
            reply = {"id": msg["id"], "error": str(exc)}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--source", action="append", default=[], metavar="NAME=PATH")
    parser.add_argument("--target", action="append", default=[], metavar="NAME=PATH")
    parser.add_argument("--kind", choices=KINDS, default="naive-count")
    args = parser.parse_args(argv)
    serve(_pairs(args.source), _pairs(args.target), args.kind)


if __name__ == "__main__":
    main()
