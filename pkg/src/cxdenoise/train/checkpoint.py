"""Binary checkpoint: magic, version, JSON header, raw little-endian arrays.

Layout::

    b"CXDNCKPT" | u32 version | u64 header length | header JSON | tensor bytes

The header holds the resolved configs, their hash, the step counter, RNG
states and a tensor index (name, dtype, shape, byte offset into the data
section).
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CXDNCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


def _rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def write_checkpoint(path: str | Path, header: dict, tensors: dict[str, np.ndarray]) -> None:
    index = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr)
        a = a.astype(a.dtype.newbyteorder("<"), copy=False)
        raw = a.tobytes()
        index.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    head = json.dumps({**header, "tensors": index}).encode()
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, VERSION, len(head)))
        f.write(head)
        for raw in blobs:
            f.write(raw)
    tmp.replace(path)


def read_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: file too short for a checkpoint")
    magic, version, head_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    start = _PREFIX.size + head_len
    if start > len(data):
        raise CheckpointError(f"{path}: header truncated")
    header = json.loads(data[_PREFIX.size : start])
    tensors = {}
    for entry in header.pop("tensors"):
        dt = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        lo = start + entry["offset"]
        if lo + count * dt.itemsize > len(data):
            raise CheckpointError(f"{path}: tensor {entry['name']!r} truncated")
        arr = np.frombuffer(data, dtype=dt, count=count, offset=lo).reshape(entry["shape"])
        tensors[entry["name"]] = arr.astype(dt.newbyteorder("="))
    return header, tensors


def save_checkpoint(trainer, path: str | Path) -> None:
    tensors = {}
    for name, p in trainer.named:
        tensors[f"param/{name}"] = p.data
        tensors[f"adam_m/{name}"] = trainer.opt.m[name]
        tensors[f"adam_v/{name}"] = trainer.opt.v[name]
    header = {
        "config": {
            "train": trainer.cfg.to_dict(),
            "model": trainer.model_cfg.to_dict(),
            "stft": trainer.stft_cfg.to_dict(),
        },
        "config_hash": trainer.config_hash,
        "step": trainer.step_count,
        "adam_t": trainer.opt.t,
        "rng_states": [_rng_state(r) for r in trainer.dropout_rngs()],
    }
    write_checkpoint(path, header, tensors)


def config_diff(a: dict, b: dict, prefix: str = "") -> list[str]:
    """Human-readable differences between two nested config dicts."""
    out = []
    for k in sorted(set(a) | set(b)):
        key = f"{prefix}{k}"
        va, vb = a.get(k, "<missing>"), b.get(k, "<missing>")
        if isinstance(va, dict) and isinstance(vb, dict):
            out += config_diff(va, vb, key + ".")
        elif va != vb:
            out.append(f"{key}: {va!r} != {vb!r}")
    return out


def load_checkpoint(trainer, path: str | Path, strict: bool = True) -> dict:
    """Restore parameters, optimizer moments, step and RNG state into ``trainer``.

    With ``strict`` the trajectory-relevant config must hash identically.
    """
    header, tensors = read_checkpoint(path)
    if strict and header["config_hash"] != trainer.config_hash:
        mine = {"train": trainer.cfg.to_dict(), "model": trainer.model_cfg.to_dict(),
                "stft": trainer.stft_cfg.to_dict()}
        diff = config_diff(header["config"], mine)
        raise CheckpointError("checkpoint config does not match:\n  " + "\n  ".join(diff))
    params = {k[6:]: v for k, v in tensors.items() if k.startswith("param/")}
    trainer.model.load_state_dict(params)
    m = {k[7:]: v for k, v in tensors.items() if k.startswith("adam_m/")}
    v = {k[7:]: v for k, v in tensors.items() if k.startswith("adam_v/")}
    trainer.opt.load_state(header["adam_t"], m, v)
    trainer.step_count = int(header["step"])
    rngs = trainer.dropout_rngs()
    if len(rngs) != len(header["rng_states"]):
        raise CheckpointError("RNG stream count differs from the checkpoint")
    for rng, state in zip(rngs, header["rng_states"]):
        rng.bit_generator.state = state
    return header
