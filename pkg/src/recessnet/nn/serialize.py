"""Deterministic model files: a zip of ``meta.json`` plus one ``.npy`` per array.

Entries carry a fixed timestamp so identical models give identical bytes;
``numpy.load`` can read the arrays directly.
"""

import io
import json
import zipfile

import numpy as np

from ..errors import StructuralError

_EPOCH = (1980, 1, 1, 0, 0, 0)


def _entry(zf, name, payload):
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def dumps(arrays, meta):
    """Serialize a ``{name: array}`` map and a JSON-able ``meta`` dict."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        shapes = {k: list(np.shape(v)) for k, v in arrays.items()}
        head = dict(meta, arrays=list(arrays), shapes=shapes)
        _entry(zf, "meta.json", json.dumps(head, sort_keys=True).encode("utf-8"))
        for k, v in arrays.items():
            b = io.BytesIO()
            np.save(b, np.ascontiguousarray(v, dtype="<f8"), allow_pickle=False)
            _entry(zf, f"{k}.npy", b.getvalue())
    return buf.getvalue()


def loads(data):
    with zipfile.ZipFile(io.BytesIO(data)) as zf:
        meta = json.loads(zf.read("meta.json"))
        arrays = {}
        for k in meta["arrays"]:
            arr = np.load(io.BytesIO(zf.read(f"{k}.npy")), allow_pickle=False)
            if list(arr.shape) != meta["shapes"][k]:
                raise StructuralError(f"{k}: stored shape {arr.shape} != {meta['shapes'][k]}")
            arrays[k] = arr
    return arrays, meta


def network_bytes(net, extra=None):
    meta = {"architecture": net.kind, "config": net.config()}
    if extra:
        meta["extra"] = extra
    return dumps(net.params, meta)


def network_from_bytes(data):
    from .network import Network

    arrays, meta = loads(data)
    if meta.get("architecture") not in ("ffn", "lstm", "gru"):
        raise StructuralError(f"not a network file: architecture {meta.get('architecture')!r}")
    cfg = dict(meta["config"])
    return Network(params=arrays, **cfg), meta


def save_network(path, net, extra=None):
    with open(path, "wb") as fh:
        fh.write(network_bytes(net, extra))


def load_network(path):
    with open(path, "rb") as fh:
        return network_from_bytes(fh.read())
