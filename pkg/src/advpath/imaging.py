"""Path images: rasterised path pairs, augmentation and feature encoding."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .gridworld import PathPair

BACKGROUND, ORIGINAL, ADVERSARIAL_ONLY = 0, 1, 2

PPM_COLORS = {
    BACKGROUND: (255, 255, 255),
    ORIGINAL: (255, 0, 0),
    ADVERSARIAL_ONLY: (0, 0, 255),
}


class CellOutOfRaster(ValueError):
    pass


class NonSquareRotation(ValueError):
    pass


class AugmentOp(str, enum.Enum):
    Identity = "Identity"
    FlipH = "FlipH"
    FlipV = "FlipV"
    Rot90 = "Rot90"
    Rot180 = "Rot180"
    Rot270 = "Rot270"


NON_IDENTITY_OPS = tuple(op for op in AugmentOp if op is not AugmentOp.Identity)


@dataclass(frozen=True, eq=False)
class PathImage:
    """Pixel classes indexed ``pixels[y, x]``."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.uint8, order="C")  # own copy, frozen below
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def histogram(self) -> tuple[int, int, int]:
        counts = np.bincount(self.pixels.ravel(), minlength=3)
        return int(counts[0]), int(counts[1]), int(counts[2])

    def __eq__(self, other):
        if not isinstance(other, PathImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def rasterize(pp: PathPair, width: int = 28, height: int = 28) -> PathImage:
    """Paint the adversarial path, then the original path over it."""
    px = np.zeros((height, width), dtype=np.uint8)
    for value, path in ((ADVERSARIAL_ONLY, pp.adversarial), (ORIGINAL, pp.original)):
        for x, y in path.steps:
            if not (0 <= x < width and 0 <= y < height):
                raise CellOutOfRaster(f"cell ({x}, {y}) outside {width}x{height} raster")
            px[y, x] = value
    return PathImage(px)


def apply_augment(img: PathImage, op: AugmentOp | str) -> PathImage:
    op = AugmentOp(op)
    px = img.pixels
    if op in (AugmentOp.Rot90, AugmentOp.Rot270) and img.width != img.height:
        raise NonSquareRotation(f"{op.value} needs a square image, got {img.width}x{img.height}")
    if op is AugmentOp.Identity:
        out = px
    elif op is AugmentOp.FlipH:
        out = px[:, ::-1]
    elif op is AugmentOp.FlipV:
        out = px[::-1, :]
    elif op is AugmentOp.Rot90:
        out = np.rot90(px, k=-1)  # clockwise
    elif op is AugmentOp.Rot180:
        out = np.rot90(px, k=2)
    else:
        out = np.rot90(px, k=1)
    return PathImage(out.copy())


def augmentation_draws(n_sources: int, n_new: int, seed: int) -> list:
    """``(source index, op)`` for each augmented copy, drawn uniformly."""
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(n_new):
        src = int(rng.integers(n_sources))
        op = NON_IDENTITY_OPS[int(rng.integers(len(NON_IDENTITY_OPS)))]
        draws.append((src, op))
    return draws


def balance_classes(minority: list, target_count: int, seed: int) -> list:
    """Grow ``minority`` to ``target_count`` with randomly augmented copies.

    Each copy picks a source image from the original list and a non-identity
    op, both uniformly.
    """
    if not minority:
        raise ValueError("cannot balance an empty class")
    if target_count < len(minority):
        raise ValueError("target_count is smaller than the class")
    draws = augmentation_draws(len(minority), target_count - len(minority), seed)
    return list(minority) + [apply_augment(minority[i], op) for i, op in draws]


def flatten(img: PathImage) -> np.ndarray:
    """Two stacked one-hot channels (original, adversarial-only), row-major."""
    px = img.pixels.ravel()
    return np.concatenate([(px == ORIGINAL), (px == ADVERSARIAL_ONLY)]).astype(np.float64)


def unflatten(vec: np.ndarray, width: int, height: int) -> PathImage:
    n = width * height
    vec = np.asarray(vec)
    if vec.shape != (2 * n,):
        raise ValueError(f"feature vector has shape {vec.shape}, expected ({2 * n},)")
    px = np.zeros(n, dtype=np.uint8)
    px[vec[:n] > 0.5] = ORIGINAL
    px[vec[n:] > 0.5] = ADVERSARIAL_ONLY
    return PathImage(px.reshape(height, width))


def to_ppm(img: PathImage) -> str:
    """Plain-text (P3) portable pixmap: original red, adversarial-only blue."""
    lines = ["P3", f"{img.width} {img.height}", "255"]
    for row in img.pixels:
        lines.append(" ".join("%d %d %d" % PPM_COLORS[int(v)] for v in row))
    return "\n".join(lines) + "\n"


def from_ppm(text: str) -> PathImage:
    tokens = [t for line in text.splitlines() if not line.startswith("#") for t in line.split()]
    if not tokens or tokens[0] != "P3":
        raise ValueError("not a P3 pixmap")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError("expected maxval 255")
    vals = np.array(tokens[4:], dtype=int)
    if vals.size != w * h * 3:
        raise ValueError("pixel count does not match header")
    rgb = vals.reshape(h, w, 3)
    lookup = {color: cls for cls, color in PPM_COLORS.items()}
    px = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            try:
                px[y, x] = lookup[tuple(int(v) for v in rgb[y, x])]
            except KeyError:
                raise ValueError(f"unknown colour at ({x}, {y})") from None
    return PathImage(px)
