"""
Image ingestion, post-processing and synthetic lesion phantoms.

Gray images are integer ndarrays (8- or 16-bit). PGM P5 files are read and
written bit-exactly; 16-bit samples are big-endian as the format requires.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import DomainError, PGMFormatError, ShapeError, SpecError

__all__ = [
    "PhantomSpec",
    "Lesion",
    "normalize",
    "binarize",
    "disk",
    "disk_cleanup",
    "gen_phantom",
    "phantom_manifest",
    "read_pgm",
    "write_pgm",
    "read_mask",
    "write_mask",
    "write_manifest",
]


def normalize(img) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant image maps to 0.5 everywhere."""
    a = np.asarray(img, dtype=float)
    lo, hi = a.min(), a.max()
    if hi == lo:
        return np.full(a.shape, 0.5)
    return (a - lo) / (hi - lo)


def binarize(mu, thresh: float = 0.5) -> np.ndarray:
    if not 0.0 < thresh < 1.0:
        raise DomainError(f"threshold must lie in (0, 1), got {thresh}")
    return np.asarray(mu) >= thresh


def disk(radius: int) -> np.ndarray:
    r = int(radius)
    y, x = np.ogrid[-r : r + 1, -r : r + 1]
    return x * x + y * y <= r * r


def disk_cleanup(mask, radius: int = 5) -> np.ndarray:
    """Morphological opening with a disk of the given radius.

    Pixels outside the image count as background, so the result is always a
    subset of ``mask``.
    """
    if radius < 1:
        raise DomainError(f"disk radius must be >= 1, got {radius}")
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return m.copy()
    return ndimage.binary_opening(m, structure=disk(radius), border_value=0)


@dataclass(frozen=True)
class Lesion:
    cx: float
    cy: float
    rx: float
    ry: float


@dataclass(frozen=True)
class PhantomSpec:
    """Synthetic lesion phantom parameters (intensities on a [0, 1] scale)."""

    size: int = 128
    lesion_count: int = 2
    lesion_radii: tuple = (8, 18)
    contrast: float = 0.4
    noise_sigma: float = 0.05
    bias_amplitude: float = 0.1
    seed: int = 0
    background: float = 0.35
    bits: int = 8

    def validate(self) -> None:
        if self.size < 16:
            raise SpecError(f"phantom size must be >= 16, got {self.size}")
        if self.lesion_count < 1:
            raise SpecError("at least one lesion is required")
        if not 0.0 < self.contrast <= 1.0:
            raise SpecError(f"contrast must lie in (0, 1], got {self.contrast}")
        if self.noise_sigma < 0 or self.bias_amplitude < 0:
            raise SpecError("noise_sigma and bias_amplitude must be non-negative")
        lo, hi = self.lesion_radii
        if not 1 <= lo <= hi:
            raise SpecError(f"invalid lesion radius range {self.lesion_radii}")
        if 2 * hi + 2 > self.size:
            raise SpecError(f"lesions of radius {hi} do not fit a {self.size}px image")
        if self.bits not in (8, 16):
            raise SpecError("bits must be 8 or 16")


def _ellipse_mask(size: int, les: Lesion) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size].astype(float)
    return ((x - les.cx) / les.rx) ** 2 + ((y - les.cy) / les.ry) ** 2 <= 1.0


def gen_phantom(spec: PhantomSpec):
    """Render a phantom and its ground truth.

    Returns ``(image, gt, lesions)``: the integer gray image, the boolean
    lesion mask and the list of :class:`Lesion` ellipses. Geometry is drawn
    first from the seeded generator so it does not depend on the noise or
    bias settings.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    lo, hi = spec.lesion_radii
    lesions = []
    for _ in range(spec.lesion_count):
        rx, ry = rng.uniform(lo, hi, size=2)
        margin = max(rx, ry) + 1
        cx, cy = rng.uniform(margin, n - 1 - margin, size=2)
        lesions.append(Lesion(float(cx), float(cy), float(rx), float(ry)))
    gt = np.zeros((n, n), dtype=bool)
    for les in lesions:
        gt |= _ellipse_mask(n, les)

    # slow multiplicative inhomogeneity: one oriented sinusoid spanning the image
    angle, phase = rng.uniform(0, 2 * np.pi, size=2)
    noise = rng.standard_normal((n, n))
    y, x = np.mgrid[0:n, 0:n] / n
    bias = 1.0 + spec.bias_amplitude * np.sin(np.pi * (np.cos(angle) * x + np.sin(angle) * y) + phase)

    clean = np.where(gt, spec.background + spec.contrast, spec.background)
    img = (clean + spec.noise_sigma * noise) * bias
    top = (1 << spec.bits) - 1
    gray = np.rint(np.clip(img, 0.0, 1.0) * top).astype(np.uint16 if spec.bits == 16 else np.uint8)
    return gray, gt, lesions


def phantom_manifest(spec: PhantomSpec, lesions) -> dict:
    return {
        "seed": spec.seed,
        "size": spec.size,
        "lesions": [asdict(les) for les in lesions],
        "contrast": spec.contrast,
        "noise_sigma": spec.noise_sigma,
        "bias_amplitude": spec.bias_amplitude,
    }


def _read_token(data: bytes, pos: int):
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMFormatError("truncated PGM header")
    return data[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM into a uint8 or uint16 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _read_token(data, 0)
    if magic != b"P5":
        raise PGMFormatError(f"not a binary PGM (magic {magic!r})")
    try:
        w_tok, pos = _read_token(data, pos)
        h_tok, pos = _read_token(data, pos)
        m_tok, pos = _read_token(data, pos)
        width, height, maxval = int(w_tok), int(h_tok), int(m_tok)
    except ValueError as exc:
        raise PGMFormatError("malformed PGM header") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PGMFormatError(f"invalid PGM geometry {width}x{height}, maxval {maxval}")
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    raster = data[pos : pos + count * dtype.itemsize]
    if len(raster) != count * dtype.itemsize:
        raise PGMFormatError("PGM raster is truncated")
    arr = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    if arr.max(initial=0) > maxval:
        raise PGMFormatError("PGM sample exceeds declared maxval")
    return arr.astype(np.uint16 if maxval > 255 else np.uint8)


def write_pgm(path, img, maxval: int | None = None) -> None:
    a = np.asarray(img)
    if a.ndim != 2:
        raise ShapeError(f"PGM images are 2-D, got shape {a.shape}")
    if a.min(initial=0) < 0:
        raise PGMFormatError("PGM samples must be non-negative")
    if maxval is None:
        maxval = 255 if a.max(initial=0) <= 255 and a.dtype.itemsize == 1 else 65535
    if a.max(initial=0) > maxval:
        raise PGMFormatError("sample exceeds maxval")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(a.astype(dtype).tobytes())


def read_mask(path) -> np.ndarray:
    return read_pgm(path) > 0


def write_mask(path, mask) -> None:
    write_pgm(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), maxval=255)


def write_manifest(path, spec: PhantomSpec, lesions) -> None:
    with open(path, "w") as fh:
        json.dump(phantom_manifest(spec, lesions), fh, indent=2, sort_keys=True)
        fh.write("\n")
