"""Argument embedding with a content-addressed cache.

The embedding input for an argument is its rationale and evidence joined by a
single newline. Vectors are L2-normalised by default. The cache key is a
digest of (encoder id, normalised flag, text), so re-runs and resumed runs
reuse every vector; cached entries live in a binary sidecar file addressed by
a JSON index.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .arguments import InvestmentArgument
from .backends import EncoderBackend
from .errors import DimensionMismatch, NumericalFailure

log = logging.getLogger(__name__)

_NORM_EPS = 1e-12


@dataclass(frozen=True)
class ArgumentEmbedding:
    """An argument id paired with its (possibly normalised) vector."""

    argument_id: str
    day: str
    ticker: str
    vector: np.ndarray

    def __post_init__(self):
        self.vector.setflags(write=False)


def cache_key(encoder_id: str, normalized: bool, text: str) -> str:
    h = hashlib.sha256()
    h.update(encoder_id.encode("utf-8"))
    h.update(b"\x00norm=1\x00" if normalized else b"\x00norm=0\x00")
    h.update(text.encode("utf-8"))
    return h.hexdigest()


class EmbeddingCache:
    """Disk cache: ``index.json`` maps keys to (offset, dim) in ``vectors.bin``.

    Reads are lock-free after load; writes are serialised by a lock and the
    index is rewritten atomically (write + rename).
    """

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.dir / "index.json"
        self.bin_path = self.dir / "vectors.bin"
        self._lock = threading.Lock()
        self._index: dict[str, list[int]] = {}
        if self.index_path.exists():
            self._index = json.loads(self.index_path.read_text(encoding="utf-8"))

    def __len__(self) -> int:
        return len(self._index)

    def get(self, key: str) -> np.ndarray | None:
        entry = self._index.get(key)
        if entry is None:
            return None
        offset, dim = entry
        with open(self.bin_path, "rb") as fh:
            fh.seek(offset)
            buf = fh.read(8 * dim)
        return np.frombuffer(buf, dtype="<f8").copy()

    def put_many(self, items: Sequence[tuple[str, np.ndarray]]) -> None:
        if not items:
            return
        with self._lock:
            with open(self.bin_path, "ab") as fh:
                for key, vec in items:
                    if key in self._index:
                        continue
                    offset = fh.tell()
                    fh.write(np.ascontiguousarray(vec, dtype="<f8").tobytes())
                    self._index[key] = [offset, int(vec.shape[0])]
            tmp = self.index_path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(self._index), encoding="utf-8")
            os.replace(tmp, self.index_path)


class Embedder:
    """Embeds argument texts via a backend, with optional cache and pinning.

    The vector dimension is discovered on the first encoder call and pinned;
    any later disagreement raises ``DimensionMismatch``.
    """

    def __init__(self, backend: EncoderBackend, *, normalize: bool = True,
                 cache: EmbeddingCache | None = None):
        self.backend = backend
        self.normalize = normalize
        self.cache = cache
        self.dim: int | None = None

    def _pin(self, dim: int) -> None:
        if self.dim is None:
            self.dim = dim
        elif dim != self.dim:
            raise DimensionMismatch(f"encoder returned dim {dim}, pinned {self.dim}")

    def _postprocess(self, rows: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(rows)):
            raise NumericalFailure("encoder returned non-finite values")
        if self.normalize:
            norms = np.linalg.norm(rows, axis=1, keepdims=True)
            rows = rows / np.maximum(norms, _NORM_EPS)
        return rows

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Embed raw texts (batched); returns an (n, dim) array."""
        n = len(texts)
        keys = [cache_key(self.backend.encoder_id, self.normalize, t) for t in texts]
        vectors: list[np.ndarray | None] = [None] * n
        missing: list[int] = []
        if self.cache is not None:
            for i, key in enumerate(keys):
                hit = self.cache.get(key)
                if hit is not None:
                    self._pin(hit.shape[0])
                    vectors[i] = hit
                else:
                    missing.append(i)
        else:
            missing = list(range(n))
        if missing:
            fresh = self.backend.encode([texts[i] for i in missing])
            fresh = np.asarray(fresh, dtype=np.float64)
            if fresh.shape[0] != len(missing):
                raise DimensionMismatch(
                    f"encoder returned {fresh.shape[0]} rows for {len(missing)} texts")
            self._pin(fresh.shape[1])
            fresh = self._postprocess(fresh)
            if self.cache is not None:
                self.cache.put_many([(keys[i], fresh[j]) for j, i in enumerate(missing)])
            for j, i in enumerate(missing):
                vectors[i] = fresh[j]
        out = np.vstack([v for v in vectors])  # type: ignore[list-item]
        if out.shape[1] != self.dim:
            raise DimensionMismatch(f"mixed dims in batch: {out.shape[1]} vs {self.dim}")
        return out

    def embed_argument(self, arg: InvestmentArgument) -> ArgumentEmbedding:
        vec = self.embed_texts([arg.text])[0]
        return ArgumentEmbedding(argument_id=arg.argument_id, day=arg.day,
                                 ticker=arg.ticker, vector=vec)

    def embed_day(self, args: Sequence[InvestmentArgument]) -> list[ArgumentEmbedding]:
        """Batch-embed one day's arguments; order follows the input."""
        if not args:
            return []
        rows = self.embed_texts([a.text for a in args])
        return [ArgumentEmbedding(argument_id=a.argument_id, day=a.day,
                                  ticker=a.ticker, vector=rows[i])
                for i, a in enumerate(args)]
