"""Binary checkpoint container.

Layout::

    b"FSATCKPT" | u32 version | u64 header length | header (UTF-8 JSON)
    | parameter blobs (little-endian float64, PARAM_ORDER) | sha256 of all preceding bytes
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from forgesat.features import PADDED_WIDTH, Standardization, get_schema
from forgesat.model import PARAM_ORDER, ForgeModel, TrainConfig
from forgesat.numerics import Parameter

MAGIC = b"FSATCKPT"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: TrainConfig
    schema_id: str
    stats: Standardization
    params: dict[str, np.ndarray]
    corpus_digest: str = ""
    padded_width: int = PADDED_WIDTH
    version: int = FORMAT_VERSION
    # set when the checkpoint is bound to a schema other than the one it was trained on
    transfer: dict | None = field(default=None, compare=False)

    @classmethod
    def from_model(cls, model: ForgeModel, schema_id: str, stats: Standardization, corpus_digest: str = ""):
        params = {n: model.params[n].value.copy() for n in PARAM_ORDER}
        return cls(model.config, get_schema(schema_id).id, stats, params, corpus_digest)

    def model(self) -> ForgeModel:
        return ForgeModel(self.config, {n: Parameter(self.params[n].copy()) for n in PARAM_ORDER})

    @property
    def codebook(self) -> np.ndarray:
        return self.params["codebook"]

    def bind_schema(self, schema_id: str) -> "Checkpoint":
        """Use the weights with another feature schema of the same padded width.

        Returns a copy whose ``transfer`` record names both schemas.  The
        standardization statistics belong to the training schema, so callers
        must refit them for the new one.
        """
        target = get_schema(schema_id).id
        if target == self.schema_id:
            return self
        if self.padded_width != PADDED_WIDTH:
            raise CheckpointError(
                f"padded width {self.padded_width} does not match current {PADDED_WIDTH}"
            )
        return Checkpoint(
            self.config, target, self.stats, self.params, self.corpus_digest,
            self.padded_width, self.version,
            transfer={"trained_schema": self.schema_id, "applied_schema": target},
        )

    def header(self) -> dict:
        return {
            "format_version": self.version,
            "schema": get_schema(self.schema_id).describe(),
            "padded_width": self.padded_width,
            "standardization": self.stats.as_dict(),
            "config": {k: getattr(self.config, k) for k in self.config.__dataclass_fields__},
            "corpus_digest": self.corpus_digest,
            "params": [{"name": n, "shape": list(self.params[n].shape)} for n in PARAM_ORDER],
        }


def dumps(ckpt: Checkpoint) -> bytes:
    header = json.dumps(ckpt.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", ckpt.version, len(header)), header]
    for n in PARAM_ORDER:
        parts.append(np.ascontiguousarray(ckpt.params[n], dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def loads(blob: bytes) -> Checkpoint:
    if len(blob) < len(MAGIC) + 12 + 32:
        raise CheckpointError("checkpoint truncated")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum mismatch (corrupt or truncated checkpoint)")
    if body[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file")
    version, hlen = struct.unpack_from("<IQ", body, len(MAGIC))
    if version not in SUPPORTED_VERSIONS:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = len(MAGIC) + 12
    header = json.loads(body[off : off + hlen].decode("utf-8"))
    off += hlen
    if header["padded_width"] != PADDED_WIDTH:
        raise CheckpointError(f"padded width {header['padded_width']} != {PADDED_WIDTH}")
    params = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=off).reshape(shape)
        params[entry["name"]] = arr.astype(np.float64)
        off += 8 * count
    if off != len(body):
        raise CheckpointError("trailing bytes after parameter blobs")
    missing = set(PARAM_ORDER) - set(params)
    if missing:
        raise CheckpointError(f"missing parameters: {sorted(missing)}")
    return Checkpoint(
        TrainConfig.from_dict(header["config"]),
        header["schema"]["id"],
        Standardization.from_dict(header["standardization"]),
        params,
        header["corpus_digest"],
        header["padded_width"],
        version,
    )


def save_checkpoint(ckpt: Checkpoint, path) -> str:
    """Write the checkpoint; returns its sha256 hex digest."""
    blob = dumps(ckpt)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def load_checkpoint(path, schema_id: str | None = None) -> Checkpoint:
    ckpt = loads(Path(path).read_bytes())
    return ckpt.bind_schema(schema_id) if schema_id else ckpt
