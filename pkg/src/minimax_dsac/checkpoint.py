"""Binary checkpoints: versioned header plus flat little-endian float64 arrays.

Layout: 8-byte magic, uint32 format version, uint64 header length, UTF-8
JSON header, then the raw parameter arrays concatenated in header order.
The header carries the algorithm name, environment-step counter, the full
config text, log_alpha, and per-network architecture descriptors, so a
checkpoint is self-describing.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .nets import Architecture, NetParams

MAGIC = b"MDSACKPT"
VERSION = 1


def _arch_descriptor(params: NetParams) -> dict:
    return {
        "in_dim": params.arch.in_dim,
        "hidden": list(params.arch.hidden),
        "out_dim": params.arch.out_dim,
        "count": params.arch.param_count,
    }


def save_checkpoint(
    path,
    nets: dict[str, NetParams],
    log_alpha: float,
    algo: str,
    env_steps: int,
    config_text: str,
) -> None:
    names = list(nets.keys())
    header = {
        "version": VERSION,
        "algo": algo,
        "env_steps": int(env_steps),
        "log_alpha": float(log_alpha),
        "config": config_text,
        "nets": {name: _arch_descriptor(nets[name]) for name in names},
        "order": names,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            fh.write(np.ascontiguousarray(nets[name].values, dtype="<f8").tobytes())


def load_checkpoint(path) -> dict:
    """Returns {algo, env_steps, log_alpha, config, nets: {name: NetParams}}."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a minimax-dsac checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        nets = {}
        for name in header["order"]:
            desc = header["nets"][name]
            arch = Architecture(desc["in_dim"], tuple(desc["hidden"]), desc["out_dim"])
            raw = fh.read(8 * desc["count"])
            if len(raw) != 8 * desc["count"]:
                raise ValueError(f"{path}: truncated parameter block for {name!r}")
            values = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            nets[name] = NetParams(arch, values)
    return {
        "algo": header["algo"],
        "env_steps": header["env_steps"],
        "log_alpha": header["log_alpha"],
        "config": header["config"],
        "nets": nets,
    }
