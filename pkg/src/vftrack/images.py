"""Frame container and 8-bit grayscale image decoding (PGM / PNG)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Frame", "load_frame", "write_pgm", "FrameError"]


class FrameError(ValueError):
    """Raised for malformed or unsupported image input."""


@dataclass(frozen=True)
class Frame:
    index: int
    width: int
    height: int
    intensities: np.ndarray  # uint8, shape (height, width), read-only

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise FrameError("frame must be at least 16x16")
        buf = np.asarray(self.intensities, dtype=np.uint8)
        if buf.shape != (self.height, self.width):
            raise FrameError(
                f"buffer shape {buf.shape} does not match "
                f"{self.height}x{self.width}"
            )
        buf = np.ascontiguousarray(buf)
        buf.setflags(write=False)
        object.__setattr__(self, "intensities", buf)


def _read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P5":
        raise FrameError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval; '#' comments allowed
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FrameError(f"{path}: truncated PGM header at byte {pos}")
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise FrameError(f"{path}: bad PGM header token at byte {start}") from None
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise FrameError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    expected = width * height
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise FrameError(
            f"{path}: raster truncated at byte {pos + len(raster)} "
            f"(expected {expected} pixels)"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _read_png(path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover
        raise FrameError("PNG support requires Pillow") from None
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise FrameError(f"{path}: 16-bit images not supported")
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    # ITU-R BT.601 luma, rounded half-up
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.floor(luma + 0.5).astype(np.uint8)


def load_frame(path, index: int = 0) -> Frame:
    """Load an 8-bit grayscale PGM (P5) or PNG file as a Frame."""
    p = str(path)
    if p.lower().endswith(".png"):
        buf = _read_png(p)
    else:
        buf = _read_pgm(p)
    h, w = buf.shape
    return Frame(index=index, width=w, height=h, intensities=buf)


def write_pgm(path, buf: np.ndarray):
    buf = np.asarray(buf, dtype=np.uint8)
    h, w = buf.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(buf.tobytes())
