"""Labeled corpora and JSONL ingestion."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..game import InvalidInputError, SourceId

__all__ = ["Instance", "SourceCorpus", "TargetCorpus", "load_jsonl", "corpus_kind", "content_hash"]


@dataclass(frozen=True)
class Instance:
    """One labeled example; ``features`` is a token tuple or a float tuple."""

    features: tuple
    label: str

    @property
    def is_text(self) -> bool:
        return not self.features or isinstance(self.features[0], str)

    @classmethod
    def text(cls, text: str, label: str) -> "Instance":
        return cls(tuple(text.split()), str(label))

    @classmethod
    def vector(cls, vec, label: str) -> "Instance":
        return cls(tuple(float(v) for v in vec), str(label))


@dataclass
class SourceCorpus:
    id: SourceId
    instances: list[Instance]

    def __post_init__(self):
        if not self.instances:
            raise InvalidInputError(f"source corpus {self.id.name!r} is empty")

    @property
    def name(self) -> str:
        return self.id.name

    def __len__(self) -> int:
        return len(self.instances)


@dataclass
class TargetCorpus:
    name: str
    instances: list[Instance]

    def __post_init__(self):
        if not self.instances:
            raise InvalidInputError(f"target corpus {self.name!r} is empty")

    def __len__(self) -> int:
        return len(self.instances)


def load_jsonl(path: str | Path) -> list[Instance]:
    """Read one instance per line: ``{"text", "label"}`` or ``{"vec", "label"}``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if "label" not in rec:
                raise InvalidInputError(f"{path}:{lineno}: missing 'label'")
            if "text" in rec and "vec" not in rec:
                out.append(Instance.text(rec["text"], rec["label"]))
            elif "vec" in rec and "text" not in rec:
                vec = rec["vec"]
                if not vec or not all(isinstance(v, (int, float)) for v in vec):
                    raise InvalidInputError(f"{path}:{lineno}: 'vec' must be a non-empty list of numbers")
                out.append(Instance.vector(vec, rec["label"]))
            else:
                raise InvalidInputError(f"{path}:{lineno}: need exactly one of 'text' or 'vec'")
    return out


def corpus_kind(corpora: Sequence) -> str:
    """``"text"`` or ``"vec"`` for a problem; mixing forms is an error."""
    kinds = {inst.is_text for c in corpora for inst in c.instances}
    if len(kinds) != 1:
        raise InvalidInputError("corpora mix text and vector instances")
    if kinds == {True}:
        return "text"
    dims = {len(inst.features) for c in corpora for inst in c.instances}
    if len(dims) != 1:
        raise InvalidInputError(f"vector instances have inconsistent dimensions {sorted(dims)}")
    return "vec"


def content_hash(instances: Sequence[Instance]) -> str:
    h = hashlib.sha256()
    for inst in instances:
        h.update(json.dumps([list(inst.features), inst.label]).encode())
        h.update(b"\n")
    return h.hexdigest()


def label_fraction(instances: Sequence[Instance], label: str) -> float:
    return float(np.mean([i.label == label for i in instances]))
