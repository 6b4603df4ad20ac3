"""Text formats for instances, point clouds, images and embeddings.

Instance file (dense)::

    # key=value            optional comment lines, e.g. name=CS100, scale=10000
    n m
    r_1 ... r_n
    c_1 ... c_m
    C_11 ... C_1m          n rows of m integer costs
    ...

Point-cloud instance file (costs computed on load as round(scale * dist))::

    # scale=6              optional comment lines; scale defaults to 1
    POINTS d
    n m
    w x_1 ... x_d          n supply lines, then m demand lines
    ...

Comment lines may only appear before the header.  Tokens are separated by
arbitrary whitespace.  Grey and colour images use the plain netpbm variants
P2 and P3; embedding files hold one ``count v_1 ... v_d`` line per token.
"""

from __future__ import annotations

import os

import numpy as np

from .core import OTInstance
from .datasets import PointCloudDistribution, QuantizationPolicy, \
    build_instance


def _split_header(lines):
    meta = {}
    body = []
    for k, line in enumerate(lines):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#") and not body:
            kv = s[1:].strip()
            if "=" in kv:
                key, val = kv.split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        body = lines[k:]
        break
    return meta, body


def _coerce(meta):
    out = {}
    for k, v in meta.items():
        try:
            out[k] = int(v)
        except ValueError:
            out[k] = v
    return out


def write_instance(inst: OTInstance, path):
    with open(path, "w") as fh:
        if inst.name:
            fh.write(f"# name={inst.name}\n")
        for k, v in inst.meta.items():
            if isinstance(v, (int, str)) and not isinstance(v, bool):
                fh.write(f"# {k}={v}\n")
        fh.write(f"{inst.n} {inst.m}\n")
        fh.write(" ".join(map(str, inst.supplies.tolist())) + "\n")
        fh.write(" ".join(map(str, inst.demands.tolist())) + "\n")
        np.savetxt(fh, inst.cost, fmt="%d")


def read_instance(path) -> OTInstance:
    """Read either instance format (detected from the first header token)."""
    with open(path) as fh:
        lines = fh.readlines()
    meta, body = _split_header(lines)
    if not body:
        raise ValueError(f"{path}: empty instance file")
    if body[0].split()[0] == "POINTS":
        return _parse_points(meta, body, path)
    tokens = " ".join(body).split()
    n, m = int(tokens[0]), int(tokens[1])
    expected = 2 + n + m + n * m
    if len(tokens) != expected:
        raise ValueError(f"{path}: expected {expected} tokens, "
                         f"found {len(tokens)}")
    vals = np.array(tokens, dtype=np.int64)
    r = vals[2:2 + n]
    c = vals[2 + n:2 + n + m]
    cost = vals[2 + n + m:].reshape(n, m)
    meta = _coerce(meta)
    name = str(meta.pop("name", os.path.splitext(os.path.basename(path))[0]))
    return OTInstance(cost, r, c, name=name, meta=meta)


def _parse_points(meta, body, path):
    head = body[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: malformed POINTS header")
    d = int(head[1])
    n, m = (int(x) for x in body[1].split())
    rows = [ln.split() for ln in body[2:] if ln.strip()]
    if len(rows) != n + m or any(len(r) != d + 1 for r in rows):
        raise ValueError(f"{path}: expected {n + m} lines of {d + 1} values")
    arr = np.array(rows, dtype=np.float64)
    a = PointCloudDistribution(arr[:n, 1:], arr[:n, 0].astype(np.int64))
    b = PointCloudDistribution(arr[n:, 1:], arr[n:, 0].astype(np.int64))
    meta = _coerce(meta)
    scale = int(meta.pop("scale", 1))
    name = str(meta.pop("name", os.path.splitext(os.path.basename(path))[0]))
    return build_instance(a, b, QuantizationPolicy(scale), name, **meta)


def write_points(a: PointCloudDistribution, b: PointCloudDistribution, path,
                 scale: int = 1, name: str = ""):
    if a.d != b.d:
        raise ValueError("dimension mismatch")
    with open(path, "w") as fh:
        if name:
            fh.write(f"# name={name}\n")
        fh.write(f"# scale={int(scale)}\n")
        fh.write(f"POINTS {a.d}\n{len(a)} {len(b)}\n")
        for cloud in (a, b):
            for w, p in zip(cloud.weights, cloud.points):
                fh.write(f"{int(w)} " + " ".join(repr(float(x)) for x in p)
                         + "\n")


def _pnm_tokens(text):
    toks = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        toks.extend(line.split())
    return toks


def read_pnm(path) -> np.ndarray:
    """Plain PGM (P2) as ``H x W`` or plain PPM (P3) as ``H x W x 3``."""
    with open(path) as fh:
        toks = _pnm_tokens(fh.read())
    magic = toks[0]
    if magic not in ("P2", "P3"):
        raise ValueError(f"{path}: only plain P2/P3 images are supported")
    w, h, _maxval = int(toks[1]), int(toks[2]), int(toks[3])
    chans = 1 if magic == "P2" else 3
    vals = np.array(toks[4:4 + w * h * chans], dtype=np.int64)
    if vals.size != w * h * chans:
        raise ValueError(f"{path}: truncated pixel data")
    return vals.reshape(h, w) if chans == 1 else vals.reshape(h, w, 3)


def write_pnm(img, path, maxval: int = 255):
    img = np.asarray(img, dtype=np.int64)
    magic = "P2" if img.ndim == 2 else "P3"
    h, w = img.shape[:2]
    with open(path, "w") as fh:
        fh.write(f"{magic}\n{w} {h}\n{maxval}\n")
        for row in img.reshape(h, -1):
            fh.write(" ".join(map(str, row.tolist())) + "\n")


def read_embeddings(path) -> PointCloudDistribution:
    """``count v_1 ... v_d`` per line; blank and ``#`` lines are skipped."""
    rows = []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if s and not s.startswith("#"):
                rows.append(s.split())
    if not rows:
        raise ValueError(f"{path}: no embeddings")
    arr = np.array(rows, dtype=np.float64)
    return PointCloudDistribution(arr[:, 1:], arr[:, 0].astype(np.int64))
