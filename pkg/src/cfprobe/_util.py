"""Seeding, hashing, atomic file writes and PNG I/O shared across the package."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np
from PIL import Image


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary string/int parts (independent of PYTHONHASHSEED)."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


def rng_for(*parts) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_array(arr: np.ndarray) -> str:
    arr = np.ascontiguousarray(arr)
    return sha256_bytes(arr.tobytes() + str(arr.dtype).encode() + str(arr.shape).encode())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write-temp-rename so a crash never leaves a partial file behind."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def save_image_png(path: str | Path, image01: np.ndarray) -> None:
    """Persist a [0,1] float image as 8-bit grayscale PNG."""
    arr = np.asarray(image01, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-D image, got shape {arr.shape}")
    data = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    img = Image.fromarray(data, mode="L")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    img.save(tmp, format="PNG")
    os.replace(tmp, path)


def load_image_png(path: str | Path) -> np.ndarray:
    """Load an 8-bit grayscale PNG back to a [0,1] float32 array."""
    with Image.open(path) as img:
        data = np.asarray(img.convert("L"), dtype=np.float32)
    return data / 255.0


def png_bytes(image01: np.ndarray) -> bytes:
    import io

    data = np.clip(np.round(np.asarray(image01, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return buf.getvalue()
