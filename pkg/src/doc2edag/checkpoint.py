"""Binary model checkpoints.

Layout (little-endian)::

    b"EDAG" | u32 format version | u64 header length | header JSON | payload

The header carries the model config, the character vocabulary, the schema
with its generation orders and digest, and a manifest of named parameters
(name, shape, byte offset). The payload is every parameter as float32,
back to back; its SHA-256 is stored in the header.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np

from doc2edag.exceptions import CheckpointError, SchemaMismatchError
from doc2edag.models.run import ModelConfig
from doc2edag.models.schema import SchemaRegistry
from doc2edag.network import CharVocabulary, Doc2EdagModel
from doc2edag.schema import registry_digest, registry_from_dict, registry_to_dict

logger = logging.getLogger("doc2edag.checkpoint")

MAGIC = b"EDAG"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<4sIQ")
_PAYLOAD_DTYPE = np.dtype("<f4")


def _header(model: Doc2EdagModel, meta: dict[str, Any] | None) -> tuple[dict[str, Any], bytes]:
    manifest = []
    chunks = []
    offset = 0
    for name, tensor in model.named_parameters():
        data = np.ascontiguousarray(tensor.data, dtype=_PAYLOAD_DTYPE)
        manifest.append({"name": name, "shape": list(data.shape), "offset": offset})
        chunks.append(data.tobytes())
        offset += data.nbytes
    payload = b"".join(chunks)
    header = {
        "config": model.config.model_dump(mode="json"),
        "vocabulary": model.vocab.chars,
        "schema": registry_to_dict(model.registry),
        "generation_orders": {s.code: list(s.generation_order) for s in model.registry.specs},
        "schema_digest": registry_digest(model.registry),
        "parameters": manifest,
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "meta": meta or {},
    }
    return header, payload


def checkpoint_bytes(model: Doc2EdagModel, meta: dict[str, Any] | None = None) -> bytes:
    header, payload = _header(model, meta)
    encoded = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(encoded)) + encoded + payload


def save_checkpoint(model: Doc2EdagModel, path: Path, meta: dict[str, Any] | None = None) -> None:
    """Write ``model`` to ``path`` (via a temporary file, then rename)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(checkpoint_bytes(model, meta))
    tmp.replace(path)
    logger.debug("saved checkpoint %s", path)


def read_header(path: Path) -> tuple[dict[str, Any], bytes]:
    """Header and verified payload of a checkpoint file.

    Raises:
        CheckpointError: Bad magic or version, a size that disagrees with
            the header, or a payload checksum mismatch.
    """
    where = str(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint: {e}", path=where) from e
    if len(blob) < _PREAMBLE.size:
        raise CheckpointError("file too short for a checkpoint", path=where)
    magic, version, header_len = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)", path=where)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}", path=where)
    start = _PREAMBLE.size + header_len
    if len(blob) < start:
        raise CheckpointError("truncated checkpoint header", path=where)
    try:
        header = json.loads(blob[_PREAMBLE.size : start].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as e:
        raise CheckpointError(f"corrupt checkpoint header: {e}", path=where) from e
    payload = blob[start:]
    if len(payload) != header.get("payload_bytes"):
        raise CheckpointError(
            f"payload has {len(payload)} bytes, header declares {header.get('payload_bytes')}",
            path=where,
        )
    if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
        raise CheckpointError("payload checksum mismatch", path=where)
    _check_manifest(header["parameters"], len(payload), where)
    return header, payload


def _check_manifest(manifest: list[dict[str, Any]], size: int, where: str) -> None:
    end = 0
    for entry in sorted(manifest, key=lambda e: e["offset"]):
        nbytes = int(np.prod(entry["shape"], dtype=np.int64)) * _PAYLOAD_DTYPE.itemsize
        if entry["offset"] < end or entry["offset"] + nbytes > size:
            raise CheckpointError(f"parameter {entry['name']} overlaps or is out of bounds", path=where)
        end = entry["offset"] + nbytes


def load_checkpoint(path: Path, registry: SchemaRegistry | None = None) -> Doc2EdagModel:
    """Rebuild a model from ``path``.

    With ``registry`` given, its digest must match the schema the model was
    trained with.

    Raises:
        CheckpointError: The file is unreadable or corrupt, or its parameters
            do not fit the architecture its config describes.
        SchemaMismatchError: ``registry`` differs from the training schema.
    """
    header, payload = read_header(path)
    if registry is not None and registry_digest(registry) != header["schema_digest"]:
        raise SchemaMismatchError(
            f"checkpoint {path} was trained under a different schema "
            f"(digest {header['schema_digest'][:12]}, given {registry_digest(registry)[:12]})"
        )
    stored = registry_from_dict(header["schema"])
    for spec in stored.specs:
        spec.generation_order = list(header["generation_orders"][spec.code])
    config = ModelConfig(**header["config"])
    model = Doc2EdagModel(config, stored, CharVocabulary(header["vocabulary"]))

    params = dict(model.named_parameters())
    manifest = {entry["name"]: entry for entry in header["parameters"]}
    if set(manifest) != set(params):
        missing = sorted(set(params) - set(manifest))
        extra = sorted(set(manifest) - set(params))
        raise CheckpointError(
            f"parameter set mismatch (missing {missing[:3]}, unexpected {extra[:3]})", path=str(path)
        )
    for name, tensor in params.items():
        entry = manifest[name]
        shape = tuple(entry["shape"])
        if shape != tensor.shape:
            raise CheckpointError(f"{name}: stored shape {shape} != {tensor.shape}", path=str(path))
        count = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE, count=count, offset=entry["offset"])
        tensor.data = data.reshape(shape).astype(tensor.data.dtype)
    logger.debug("loaded checkpoint %s (%d parameters)", path, len(params))
    return model
