"""Binary model file: magic, version, JSON architecture header, raw tensors, CRC.

Layout (all integers little-endian):

    bytes 0..7    magic  b"BSEPNET\\0"
    bytes 8..11   format version (uint32)
    bytes 12..15  header length in bytes (uint32)
    header        UTF-8 JSON: architecture + ordered tensor declarations
    tensors       raw C-order little-endian arrays, in declared order
    trailer       CRC-32 (uint32) over every preceding byte

Float tensors are stored as float32; sketch hash buckets as int64. Loading a
file therefore always yields a float32 model.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..sketch import SketchParams
from .model import CbpFusion, TcnModel

MAGIC = b"BSEPNET\x00"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _sketch_tensors(model):
    if not isinstance(model.fusion, CbpFusion):
        return []
    f = model.fusion
    return [
        ("fusion.pu.h", f.pu.h.astype("<i8")),
        ("fusion.pu.s", f.pu.s.astype("<f4")),
        ("fusion.pw.h", f.pw.h.astype("<i8")),
        ("fusion.pw.s", f.pw.s.astype("<f4")),
    ]


def save_model(model: TcnModel, path) -> None:
    tensors = [
        (name, getattr(layer, attr).astype("<f4"))
        for name, layer, attr in model.state_tensors()
    ]
    tensors += _sketch_tensors(model)
    header = {
        "format_version": FORMAT_VERSION,
        "arch": {
            "channels": model.channels,
            "dilations": list(model.dilations),
            "taps": model.taps,
            "fusion": model.fusion_mode,
            "input_mode": model.input_mode,
            "d_out": model.d_out,
            "bn_eps": model.bn_eps,
            "bn_momentum": model.bn_momentum,
            "seed": model.seed,
        },
        "tensors": [
            {"name": n, "shape": list(a.shape), "dtype": a.dtype.str}
            for n, a in tensors
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", FORMAT_VERSION)
    body += struct.pack("<I", len(blob))
    body += blob
    for _, a in tensors:
        body += np.ascontiguousarray(a).tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as fh:
        fh.write(bytes(body))


def model_digest(path) -> str:
    """Hex CRC-32 of the whole file, used to identify models in reports."""
    with open(path, "rb") as fh:
        return f"{zlib.crc32(fh.read()) & 0xFFFFFFFF:08x}"


def load_model(path) -> TcnModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    version = struct.unpack("<I", raw[8:12])[0]
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )
    if struct.unpack("<I", raw[-4:])[0] != zlib.crc32(raw[:-4]):
        raise ModelFormatError(f"{path}: checksum mismatch, file is corrupt")
    hlen = struct.unpack("<I", raw[12:16])[0]
    if 16 + hlen + 4 > len(raw):
        raise ModelFormatError(f"{path}: truncated header")
    header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    arch = header["arch"]

    model = TcnModel(
        channels=arch["channels"],
        dilations=tuple(arch["dilations"]),
        taps=arch["taps"],
        fusion=arch["fusion"],
        input_mode=arch["input_mode"],
        d_out=arch["d_out"],
        seed=arch["seed"],
        dtype=np.float32,
        bn_eps=arch["bn_eps"],
        bn_momentum=arch["bn_momentum"],
    )

    data = {}
    offset = 16 + hlen
    for decl in header["tensors"]:
        dt = np.dtype(decl["dtype"])
        shape = tuple(decl["shape"])
        nbytes = dt.itemsize * int(np.prod(shape, dtype=np.int64))
        if offset + nbytes > len(raw) - 4:
            raise ModelFormatError(f"{path}: truncated tensor {decl['name']}")
        data[decl["name"]] = np.frombuffer(
            raw, dtype=dt, count=int(np.prod(shape, dtype=np.int64)), offset=offset
        ).reshape(shape)
        offset += nbytes
    if offset != len(raw) - 4:
        raise ModelFormatError(f"{path}: trailing bytes after declared tensors")

    for name, layer, attr in model.state_tensors():
        if name not in data:
            raise ModelFormatError(f"{path}: missing tensor {name}")
        cur = getattr(layer, attr)
        if data[name].shape != cur.shape:
            raise ModelFormatError(
                f"{path}: tensor {name} has shape {data[name].shape}, expected {cur.shape}"
            )
        setattr(layer, attr, data[name].astype(np.float32))

    if model.fusion_mode == "cbp" and model.input_mode == "both":
        for key in ("fusion.pu.h", "fusion.pu.s", "fusion.pw.h", "fusion.pw.s"):
            if key not in data:
                raise ModelFormatError(f"{path}: missing tensor {key}")
        pu = SketchParams(
            h=data["fusion.pu.h"].astype(np.int64),
            s=data["fusion.pu.s"].astype(np.float64),
            d_out=model.d_out,
        )
        pw = SketchParams(
            h=data["fusion.pw.h"].astype(np.int64),
            s=data["fusion.pw.s"].astype(np.float64),
            d_out=model.d_out,
        )
        model.fusion = CbpFusion(pu, pw, np.float32)
    return model
