"""Spin-network basis cache files (npz) keyed by group, irreps and lattice.

The generating set and magnetic term never enter the key: the basis
depends only on the group data and the graph.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import zipfile
from pathlib import Path

import numpy as np

from .lattice import LatticeGraph
from .representation import InvariantBasis, IrrepSet, SiteSignature
from .spin_network import SpinNetworkBasis

__all__ = ["CacheError", "StaleCacheError", "content_hash", "save_basis", "load_basis"]

FORMAT_VERSION = 1


class CacheError(RuntimeError):
    pass


class StaleCacheError(CacheError):
    pass


def content_hash(S: IrrepSet, lat: LatticeGraph) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(S.group.mul, dtype=np.int64).tobytes())
    for r in S:
        m = np.ascontiguousarray(r.matrices, dtype=np.complex128)
        h.update(str(m.shape).encode())
        h.update(m.tobytes())
    h.update(lat.canonical_text().encode())
    return h.hexdigest()


def _payload_digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for key in sorted(arrays):
        a = np.ascontiguousarray(arrays[key])
        h.update(key.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_basis(path: str | Path, basis: SpinNetworkBasis) -> Path:
    """Write atomically; a failed write leaves no partial file behind."""
    path = Path(path)
    sigs = sorted(basis.tensors, key=lambda s: s.slots)
    arrays = {
        "assignments": np.asarray(basis.assignments),
        "inv_dims": np.asarray(basis.inv_dims),
        "offsets": np.asarray(basis.offsets),
    }
    for i, sig in enumerate(sigs):
        arrays[f"tensor_{i}"] = np.asarray(basis.tensors[sig].tensors)
    meta = {
        "format": FORMAT_VERSION,
        "content_hash": content_hash(basis.irreps, basis.lattice),
        "payload": _payload_digest(arrays),
        "signatures": [[list(map(list, s.slots))] for s in sigs],
        "n_states": len(basis),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_basis(path: str | Path, S: IrrepSet, lat: LatticeGraph) -> SpinNetworkBasis:
    """Read a cache written by :func:`save_basis` for the same group data and graph."""
    try:
        with np.load(Path(path), allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {k: z[k] for k in z.files if k != "meta"}
    except (OSError, ValueError, KeyError, zipfile.BadZipFile) as exc:
        raise CacheError(f"cannot read basis cache {path}: {exc}") from exc
    if meta.get("format") != FORMAT_VERSION:
        raise CacheError(f"unsupported cache format {meta.get('format')}")
    if _payload_digest(arrays) != meta.get("payload"):
        raise CacheError("basis cache is corrupted or was modified (payload checksum mismatch)")
    if meta.get("content_hash") != content_hash(S, lat):
        raise StaleCacheError("basis cache was built for different group, irreps or lattice; rebuild it")
    tensors = {}
    for i, (slots,) in enumerate(meta["signatures"]):
        sig = SiteSignature(tuple((int(j), bool(d)) for j, d in slots))
        t = arrays[f"tensor_{i}"]
        t.setflags(write=False)
        tensors[sig] = InvariantBasis(sig, t)
        S.cached(("inv", sig), lambda b=tensors[sig]: b)
    for key in ("assignments", "inv_dims", "offsets"):
        arrays[key].setflags(write=False)
    basis = SpinNetworkBasis(S, lat, arrays["assignments"], arrays["inv_dims"], arrays["offsets"], tensors)
    if len(basis) != meta["n_states"]:
        raise CacheError("state count in cache metadata does not match the stored offsets")
    return basis
