"""Plain-text vector files.

Format (UTF-8)::

    #D 16384 TWIST          optional header: domain size and optional name
    17<TAB>3.0              one "index value" pair per line (tab or spaces)
    42 1

A file may hold several vectors, each started by its own ``#D`` header.
Without a header the domain size is ``max(index) + 1``.  Repeated indices
within a vector are summed, matching a Turnstile stream.  Blank lines and
lines starting with ``##`` are ignored.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorpusFormatError, ModelViolationError
from .oracle import exact_shannon
from .sketch import SparseVector


@dataclass(frozen=True)
class VectorSummary:
    name: str
    d: int
    nnz: int
    sparsity: float
    entropy_bits: float


class _Block:
    def __init__(self, d=None, name="", line=0):
        self.d = d
        self.name = name
        self.line = line
        self.acc = defaultdict(float)

    def finish(self) -> SparseVector:
        if not self.acc:
            raise CorpusFormatError("vector has no entries", line=self.line)
        idx = np.fromiter(sorted(self.acc), dtype=np.int64)
        vals = np.array([self.acc[i] for i in idx.tolist()])
        d = self.d if self.d is not None else int(idx.max()) + 1
        if idx.max() >= d:
            raise CorpusFormatError(f"index {int(idx.max())} outside declared domain {d}", line=self.line)
        if np.any(vals < 0):
            bad = int(idx[np.argmax(vals < 0)])
            raise ModelViolationError(
                f"vector {self.name or '?'} has negative value at index {bad}: strict-Turnstile violated"
            )
        return SparseVector(idx, vals, d=d, name=self.name)


def parse_vectors(text: str) -> list[SparseVector]:
    blocks: list[_Block] = []
    cur = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("##"):
            continue
        if line.startswith("#D"):
            parts = line[2:].split(maxsplit=1)
            try:
                d = int(parts[0])
            except (IndexError, ValueError):
                raise CorpusFormatError(f"bad header {raw!r}", line=lineno) from None
            if d < 1:
                raise CorpusFormatError("domain size must be positive", line=lineno)
            cur = _Block(d, parts[1].strip() if len(parts) > 1 else "", lineno)
            blocks.append(cur)
            continue
        fields = line.split()
        if len(fields) != 2:
            raise CorpusFormatError(f"expected 'index value', got {raw!r}", line=lineno)
        try:
            i = int(fields[0])
            a = float(fields[1])
        except ValueError:
            raise CorpusFormatError(f"expected 'index value', got {raw!r}", line=lineno) from None
        if i < 0 or not math.isfinite(a):
            raise CorpusFormatError(f"bad entry {raw!r}", line=lineno)
        if cur is None:
            cur = _Block(line=lineno)
            blocks.append(cur)
        if cur.d is not None and i >= cur.d:
            raise CorpusFormatError(f"index {i} outside declared domain {cur.d}", line=lineno)
        cur.acc[i] += a
    if not blocks:
        raise CorpusFormatError("no vectors in input")
    out = [b.finish() for b in blocks]
    for n, v in enumerate(out):
        if not v.name:
            v.name = f"v{n}"
    return out


def ingest_corpus(path) -> list[SparseVector]:
    return parse_vectors(Path(path).read_text(encoding="utf-8"))


def format_vector(v: SparseVector) -> str:
    head = f"#D {v.d} {v.name}".rstrip()
    body = "".join(f"{int(i)}\t{float(a)!r}\n" for i, a in zip(v.indices, v.values))
    return head + "\n" + body


def summarize(v: SparseVector) -> VectorSummary:
    if v.nnz == 0:
        return VectorSummary(v.name, v.d, 0, 0.0, float("nan"))
    return VectorSummary(v.name, v.d, v.nnz, v.sparsity, exact_shannon(v, 2.0))
