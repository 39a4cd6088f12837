"""File formats: PNG (gamma-encoded, clipped), PFM (linear radiance),
plain-text kernels, LSF parameter files, and flat key=value configs."""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image

from .imops import as_image, check_kernel
from .lsf import LsfParams

DEFAULT_GAMMA = 2.2


def read_png(path, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Load a PNG as a linear radiance image in [0, 1] (clip level 1.0)."""
    im = Image.open(path)
    arr = np.asarray(im)
    if arr.dtype == np.uint8:
        data = arr.astype(np.float64) / 255.0
    elif arr.dtype in (np.uint16, np.int32):
        data = arr.astype(np.float64) / 65535.0
    else:
        data = arr.astype(np.float64)
    if data.ndim == 3 and data.shape[2] == 4:
        data = data[:, :, :3]
    return np.clip(data, 0.0, 1.0) ** gamma


def write_png(path, img: np.ndarray, gamma: float = DEFAULT_GAMMA) -> None:
    """Write linear radiance as an 8-bit PNG (clamped, gamma-encoded)."""
    img = np.clip(as_image(img), 0.0, 1.0) ** (1.0 / gamma)
    arr = np.round(img * 255.0).astype(np.uint8)
    Image.fromarray(arr).save(path)


def read_pfm(path) -> np.ndarray:
    """Portable float map; the sign of the scale field encodes endianness."""
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header == b"PF":
            channels = 3
        elif header == b"Pf":
            channels = 1
        else:
            raise ValueError(f"not a PFM file: bad header {header!r}")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = width * height * channels
        data = np.frombuffer(fh.read(count * 4), dtype=endian + "f4", count=count)
    data = data.reshape(height, width, channels) if channels == 3 else data.reshape(height, width)
    # PFM rows are stored bottom-up.
    return np.flipud(data).astype(np.float64).copy()


def write_pfm(path, img: np.ndarray) -> None:
    img = as_image(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    header = b"PF" if img.ndim == 3 else b"Pf"
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")  # little-endian
        fh.write(np.flipud(img).astype("<f4").tobytes())


def read_image(path, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    path = str(path)
    if path.lower().endswith(".pfm"):
        return read_pfm(path)
    return read_png(path, gamma)


def read_kernel(path) -> np.ndarray:
    """Plain-text grid: first line 'k k', then k rows of k reals."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError("kernel file too short")
    kh, kw = int(tokens[0]), int(tokens[1])
    vals = [float(t) for t in tokens[2:]]
    if len(vals) != kh * kw:
        raise ValueError(f"expected {kh * kw} taps, got {len(vals)}")
    return check_kernel(np.array(vals).reshape(kh, kw))


def write_kernel(path, k: np.ndarray) -> None:
    k = np.asarray(k, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"{k.shape[0]} {k.shape[1]}\n")
        for row in k:
            fh.write(" ".join(f"{v:.12g}" for v in row) + "\n")


def read_lsf_params(path) -> LsfParams:
    """Four-field key-value text file: p1= .. p4=."""
    vals = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            vals[key.strip()] = float(val)
    try:
        return LsfParams(vals["p1"], vals["p2"], vals["p3"], vals["p4"])
    except KeyError as exc:
        raise ValueError(f"LSF parameter file missing {exc}") from exc


def write_lsf_params(path, params: LsfParams) -> None:
    with open(path, "w") as fh:
        for name, val in zip(("p1", "p2", "p3", "p4"), params.as_tuple()):
            fh.write(f"{name} = {val:.12g}\n")


def read_config(path) -> dict[str, str]:
    """Flat INI-style key = value file (no sections)."""
    cfg = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            cfg[key.strip()] = val.strip()
    return cfg
