"""JSON documents for tensors, certificates and reports.

Floats are written with Python's shortest round-trip repr, so
``load(save(x))`` reproduces every entry bit for bit. Complex scalars are
two-element ``[re, im]`` arrays.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .certificates import SubrankCertificate
from .errors import MalformedInput
from .tensor import COMPLEX, FIELDS, REAL, Tensor3


def _encode_scalar(z, field):
    if field == COMPLEX:
        z = complex(z)
        return [z.real, z.imag]
    return float(z)


def _decode_scalars(items, field, where):
    if field == COMPLEX:
        out = np.empty(len(items), dtype=np.complex128)
        for i, z in enumerate(items):
            if isinstance(z, (int, float)) and not isinstance(z, bool):
                out[i] = complex(z)
            elif (isinstance(z, list) and len(z) == 2
                  and all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in z)):
                out[i] = complex(z[0], z[1])
            else:
                raise MalformedInput(f"{where}: entry {i} is not a number or [re, im] pair")
        return out
    out = np.empty(len(items), dtype=np.float64)
    for i, z in enumerate(items):
        if isinstance(z, bool) or not isinstance(z, (int, float)):
            raise MalformedInput(f"{where}: entry {i} is not a real number")
        out[i] = z
    return out


def _field(doc, where):
    field = doc.get("field", REAL)
    if field not in FIELDS:
        raise MalformedInput(f"{where}: field must be one of {FIELDS}, got {field!r}")
    return field


def tensor_to_dict(T: Tensor3) -> dict:
    return {
        "shape": list(T.shape),
        "field": T.field,
        "data": [_encode_scalar(z, T.field) for z in T.data.reshape(-1)],
    }


def tensor_from_dict(doc) -> Tensor3:
    if not isinstance(doc, dict):
        raise MalformedInput("tensor document must be a JSON object")
    for key in ("shape", "data"):
        if key not in doc:
            raise MalformedInput(f"tensor document lacks {key!r}")
    shape = doc["shape"]
    if (not isinstance(shape, list) or len(shape) != 3
            or not all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in shape)):
        raise MalformedInput(f"shape must be three positive integers, got {shape!r}")
    field = _field(doc, "tensor")
    data = doc["data"]
    if not isinstance(data, list):
        raise MalformedInput("tensor data must be a flat list")
    if len(data) != math.prod(shape):
        raise MalformedInput(
            f"data has {len(data)} entries but shape {shape} needs {math.prod(shape)}")
    return Tensor3(_decode_scalars(data, field, "tensor data").reshape(shape), field)


def _matrix_to_list(M, field):
    return [[_encode_scalar(z, field) for z in row] for row in M]


def _matrix_from_list(rows, field, where):
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        raise MalformedInput(f"{where} must be a list of rows")
    widths = {len(row) for row in rows}
    if len(widths) > 1:
        raise MalformedInput(f"{where} has ragged rows")
    flat = _decode_scalars([z for row in rows for z in row], field, where)
    return flat.reshape(len(rows), widths.pop() if widths else 0)


def certificate_to_dict(cert: SubrankCertificate) -> dict:
    doc = {"r": cert.r, "field": cert.field}
    for name, M in zip(("phi1", "phi2", "phi3"), cert.maps):
        doc[name] = _matrix_to_list(M, cert.field)
    # an r = 0 certificate cannot carry its column counts in empty row lists
    doc["source_shape"] = list(cert.source_shape)
    return doc


def certificate_from_dict(doc) -> SubrankCertificate:
    if not isinstance(doc, dict):
        raise MalformedInput("certificate document must be a JSON object")
    for key in ("r", "phi1", "phi2", "phi3"):
        if key not in doc:
            raise MalformedInput(f"certificate document lacks {key!r}")
    field = _field(doc, "certificate")
    maps = [_matrix_from_list(doc[k], field, k) for k in ("phi1", "phi2", "phi3")]
    if doc["r"] == 0:
        cols = doc.get("source_shape")
        if not isinstance(cols, list) or len(cols) != 3:
            raise MalformedInput("an r = 0 certificate needs source_shape")
        maps = [np.zeros((0, int(n)), dtype=m.dtype) for m, n in zip(maps, cols)]
    if any(m.shape[0] != doc["r"] for m in maps):
        raise MalformedInput(f"maps do not all have r = {doc['r']} rows")
    try:
        return SubrankCertificate(*maps, field=field)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False)


def save_json(doc, path) -> None:
    Path(path).write_text(dumps(doc) + "\n", encoding="utf-8")


def load_tensor(path) -> Tensor3:
    return tensor_from_dict(load_json(path))


def save_tensor(T: Tensor3, path) -> None:
    save_json(tensor_to_dict(T), path)


def load_certificate(path) -> SubrankCertificate:
    return certificate_from_dict(load_json(path))


def save_certificate(cert: SubrankCertificate, path) -> None:
    save_json(certificate_to_dict(cert), path)
