"""Binary checkpoint format, weight averaging, and embedding pruning.

MTCK format (all integers little-endian, version 1):

    magic      4 bytes  "MTCK"
    version    u32
    step       u64      training step this checkpoint was saved at
    n_tensors  u32
    per tensor:
        name_len u32, name UTF-8
        rank     u32
        extents  rank x u64
        data     prod(extents) x f32

read(write(c)) is bit-exact. Tensors are float32 numpy arrays, row-major.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    CheckpointError,
    TensorShapeError,
    TruncatedCheckpointError,
)
from .subword import SPECIALS, SubwordVocab

MAGIC = b"MTCK"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Ordered name -> float32 tensor map plus step metadata."""

    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    format_version: int = FORMAT_VERSION

    def add(self, name: str, array: np.ndarray) -> None:
        arr = np.ascontiguousarray(array, dtype=np.float32)
        if arr.ndim == 0:
            raise TensorShapeError(f"tensor {name!r}: shape must be non-empty (wrap scalars as shape [1])")
        if name in self.tensors:
            raise CheckpointError(f"duplicate tensor name {name!r}")
        self.tensors[name] = arr

    def signature(self) -> tuple[tuple[str, tuple[int, ...]], ...]:
        return tuple((name, tuple(t.shape)) for name, t in self.tensors.items())


def write_checkpoint(ckpt: Checkpoint, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", ckpt.format_version))
        fh.write(struct.pack("<Q", ckpt.step))
        fh.write(struct.pack("<I", len(ckpt.tensors)))
        for name, tensor in ckpt.tensors.items():
            if tensor.dtype != np.float32:
                raise TensorShapeError(f"tensor {name!r} is not float32")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", tensor.ndim))
            for extent in tensor.shape:
                fh.write(struct.pack("<Q", extent))
            payload = tensor.astype("<f4", copy=False).tobytes(order="C")
            if len(payload) != 4 * tensor.size:
                raise TensorShapeError(f"tensor {name!r}: payload does not match shape")
            fh.write(payload)


def read_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise TruncatedCheckpointError(f"{path}: file ends inside {what}")
        out = blob[pos:pos + n]
        pos += n
        return out

    if take(4, "magic") != MAGIC:
        raise BadMagicError(f"{path}: not an MTCK checkpoint (bad magic)")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != FORMAT_VERSION:
        raise BadVersionError(f"{path}: unsupported format version {version}")
    (step,) = struct.unpack("<Q", take(8, "step"))
    (n_tensors,) = struct.unpack("<I", take(4, "tensor count"))

    ckpt = Checkpoint(step=step, format_version=version)
    for t in range(n_tensors):
        (name_len,) = struct.unpack("<I", take(4, f"tensor {t} name length"))
        name = take(name_len, f"tensor {t} name").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, f"tensor {name!r} rank"))
        if rank == 0:
            raise TensorShapeError(f"{path}: tensor {name!r} declares empty shape")
        shape = struct.unpack(f"<{rank}Q", take(8 * rank, f"tensor {name!r} extents"))
        count = 1
        for extent in shape:
            count *= extent
        need = 4 * count
        if pos + need > len(blob):
            raise TensorShapeError(
                f"{path}: tensor {name!r} declares shape {list(shape)} "
                f"({count} values) but only {(len(blob) - pos) // 4} remain"
            )
        data = np.frombuffer(blob[pos:pos + need], dtype="<f4").reshape(shape)
        pos += need
        if name in ckpt.tensors:
            raise CheckpointError(f"{path}: duplicate tensor name {name!r}")
        ckpt.tensors[name] = data.astype(np.float32)
    if pos != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - pos} trailing bytes after declared contents")
    return ckpt


def checkpoint_summary(ckpt: Checkpoint) -> list[dict]:
    """Names, shapes and payload checksums, for `ckpt inspect`."""
    rows = []
    for name, tensor in ckpt.tensors.items():
        digest = hashlib.sha256(tensor.astype("<f4", copy=False).tobytes(order="C")).hexdigest()
        rows.append({"name": name, "shape": list(tensor.shape), "sha256": digest[:16]})
    return rows


def average_checkpoints(paths: list[str], n_last: int = 5) -> Checkpoint:
    """Element-wise mean of the n_last highest-step checkpoints.

    Accumulates in float64 and rounds once to float32, so the result does
    not depend on the order of the inputs. Steps must be distinct; the
    output carries the maximum step.
    """
    if n_last < 1:
        raise ValueError("n_last must be >= 1")
    if len(paths) < n_last:
        raise CheckpointError(f"need at least {n_last} checkpoints, got {len(paths)}")
    loaded = [read_checkpoint(p) for p in paths]
    steps = [c.step for c in loaded]
    if len(set(steps)) != len(steps):
        raise CheckpointError("checkpoint steps are not distinct; cannot define the last N")
    loaded.sort(key=lambda c: c.step)
    selected = loaded[-n_last:]

    signature = selected[0].signature()
    for ckpt in selected[1:]:
        if ckpt.signature() != signature:
            raise TensorShapeError("checkpoints disagree on tensor names or shapes")

    out = Checkpoint(step=max(c.step for c in selected))
    for name, _ in signature:
        acc = np.zeros(selected[0].tensors[name].shape, dtype=np.float64)
        for ckpt in selected:
            acc += ckpt.tensors[name].astype(np.float64)
        out.tensors[name] = (acc / n_last).astype(np.float32)
    return out


@dataclass(frozen=True)
class PruneReport:
    original_vocab: int
    kept_vocab: int
    ratio: float
    remap: dict[int, int]

    def as_dict(self) -> dict:
        return {
            "original_vocab": self.original_vocab,
            "kept_vocab": self.kept_vocab,
            "ratio": self.ratio,
        }


def prune_embeddings(
    ckpt: Checkpoint,
    embed_name: str,
    full_vocab: SubwordVocab,
    keep: set[int],
) -> tuple[Checkpoint, SubwordVocab, PruneReport]:
    """Restrict the embedding matrix (and any tensor whose leading extent
    equals the vocabulary size, e.g. a tied output projection) to the kept
    token ids. Specials are always retained. Row selection only: kept rows
    are bit-identical to their source rows."""
    if embed_name not in ckpt.tensors:
        raise CheckpointError(f"embedding tensor {embed_name!r} not present in checkpoint")
    embed = ckpt.tensors[embed_name]
    n_vocab = len(full_vocab)
    if embed.ndim != 2 or embed.shape[0] != n_vocab:
        raise TensorShapeError(
            f"embedding {embed_name!r} has shape {list(embed.shape)}, expected [{n_vocab}, d]"
        )
    bad = [i for i in keep if not (0 <= i < n_vocab)]
    if bad:
        raise CheckpointError(f"keep set contains ids outside the vocabulary: {sorted(bad)[:5]}")

    kept_ids = sorted(set(keep) | set(range(len(SPECIALS))))
    remap = {old: new for new, old in enumerate(kept_ids)}

    out = Checkpoint(step=ckpt.step)
    for name, tensor in ckpt.tensors.items():
        if tensor.shape[0] == n_vocab:
            out.tensors[name] = np.ascontiguousarray(tensor[kept_ids])
        else:
            out.tensors[name] = tensor
    pruned_vocab = SubwordVocab(tuple(full_vocab.tokens[i] for i in kept_ids))
    report = PruneReport(
        original_vocab=n_vocab,
        kept_vocab=len(kept_ids),
        ratio=n_vocab / len(kept_ids),
        remap=remap,
    )
    return out, pruned_vocab, report
