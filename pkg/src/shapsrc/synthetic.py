"""Synthetic corpora and games for experiments and tests.

Running ``python -m shapsrc.synthetic DIR`` writes the noisy-source text
problem (JSONL corpora plus a ready-to-run ``run.toml``) to ``DIR``.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from .game import make_source_ids
from .oracle import Instance, SourceCorpus, TabularGame, TargetCorpus

__all__ = ["text_corpus", "noisy_source_problem", "complementary_pair_game", "write_problem"]


def text_corpus(n: int, n_classes: int, rng: np.random.Generator, *, signal: float = 0.2,
                confusion: float = 0.1, length: int = 8, class_vocab: int = 15,
                noise_vocab: int = 200, flip: float = 0.0) -> list[Instance]:
    """Bag-of-words documents whose tokens carry weak class evidence.

    Each token comes from the document class's indicative words with
    probability ``signal``, from the next class's words with probability
    ``confusion``, and from shared filler words otherwise. ``flip`` relabels
    that fraction of documents to the next class.
    """
    labels = rng.integers(0, n_classes, size=n)
    out = []
    for y in labels:
        toks = []
        for _ in range(length):
            r = rng.random()
            if r < signal:
                toks.append(f"c{y}w{rng.integers(class_vocab)}")
            elif r < signal + confusion:
                toks.append(f"c{(y + 1) % n_classes}w{rng.integers(class_vocab)}")
            else:
                toks.append(f"n{rng.integers(noise_vocab)}")
        label = int(y)
        if flip and rng.random() < flip:
            label = (label + 1) % n_classes
        out.append(Instance(tuple(toks), f"class{label}"))
    return out


def noisy_source_problem(seed: int = 0, m: int = 6, size: int = 500, noisy: int = 5,
                         flip: float = 0.5, n_classes: int = 3, noisy_length: int = 24,
                         dev_size: int = 500, test_size: int = 1000
                         ) -> tuple[list[SourceCorpus], dict[str, TargetCorpus]]:
    """``m`` sources of ``size`` documents; source ``noisy`` has ``flip`` of its
    labels shifted and longer documents (so it carries more token mass).

    Returns the sources and ``{"dev": ..., "test": ...}`` targets drawn from
    the clean distribution.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    sources = []
    for sid in make_source_ids([f"src{j}" for j in range(m)]):
        bad = sid.index == noisy
        sources.append(SourceCorpus(sid, text_corpus(
            size, n_classes, rng, flip=flip if bad else 0.0, length=noisy_length if bad else 8)))
    targets = {
        "dev": TargetCorpus("dev", text_corpus(dev_size, n_classes, rng)),
        "test": TargetCorpus("test", text_corpus(test_size, n_classes, rng)),
    }
    return sources, targets


def complementary_pair_game(m: int = 5, pair_value: float = 0.5, solo: float = 0.1) -> TabularGame:
    """Sources 0 and 1 are worth ``pair_value`` together and nothing apart;
    every other source adds ``solo`` on its own."""
    def rule(key):
        v = pair_value if (0 in key and 1 in key) else 0.0
        return [v + solo * sum(1 for j in key.members if j >= 2)]

    return TabularGame(m, rule, 1, "complementary-pair")


def _dump(path: Path, instances) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps({"text": " ".join(inst.features), "label": inst.label}) + "\n")


def write_problem(out: Path, seed: int = 0, nepoch: int = 200) -> Path:
    """Write the noisy-source problem and a run config; returns the config path."""
    out.mkdir(parents=True, exist_ok=True)
    sources, targets = noisy_source_problem(seed)
    lines = [f"seed = {seed}", ""]
    for s in sources:
        _dump(out / f"{s.name}.jsonl", s.instances)
        lines += ["[[sources]]", f'name = "{s.name}"', f'path = "{s.name}.jsonl"', ""]
    for name, t in targets.items():
        _dump(out / f"{name}.jsonl", t.instances)
        lines += ["[[targets]]", f'name = "{name}"', f'path = "{name}.jsonl"', ""]
    lines += [
        "[oracle]", 'kind = "naive-count"', "",
        "[engine]", f"nepoch = {nepoch}", "sample_rate = 0.5", 'rho = "EmptyScore"', "",
        "[select]", 'dev_target = "dev"', 'test_target = "test"', "candidates = [0.01, 0.005, 0.001]", "",
        "[output]", 'dir = "out"', "",
    ]
    cfg = out / "run.toml"
    cfg.write_text("\n".join(lines))
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(description="write the synthetic noisy-source problem")
    parser.add_argument("out", type=Path)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--nepoch", type=int, default=200)
    args = parser.parse_args(argv)
    print(write_problem(args.out, args.seed, args.nepoch))


if __name__ == "__main__":
    main()
