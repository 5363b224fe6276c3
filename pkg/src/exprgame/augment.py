"""Training-set expansion: 5 appearance filters x 6 affine transforms per image.

Filters are expressed as explicit 2-D kernels (smoothing kernels sum to 1)
and applied per channel with edge replication. Affines are 2x3 matrices in
(row, col) coordinates, applied about the image center with bilinear
sampling and edge replication; combined filter-then-affine, each input
yields exactly 30 outputs clamped to [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .imgio import check_image

FILTER_KINDS = ("disk", "average", "gaussian", "unsharp", "motion")


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    radius: int = 2          # disk
    size: int = 3            # average window / gaussian support
    sigma: float = 1.0       # gaussian, unsharp base
    amount: float = 0.8      # unsharp strength
    length: int = 5          # motion extent
    angle: float = 0.0       # motion direction, degrees

    def kernel(self) -> np.ndarray:
        if self.kind == "disk":
            return _disk_kernel(self.radius)
        if self.kind == "average":
            return _average_kernel(self.size)
        if self.kind == "gaussian":
            return _gaussian_kernel(self.sigma, self.size)
        if self.kind == "unsharp":
            # (1+a)*identity - a*gaussian; weights still sum to 1
            g = _gaussian_kernel(self.sigma, self.size)
            k = -self.amount * g
            c = self.size // 2
            k[c, c] += 1.0 + self.amount
            return k
        if self.kind == "motion":
            return _motion_kernel(self.length, self.angle)
        raise ConfigError(f"unknown filter kind {self.kind!r}")


def _disk_kernel(radius: int) -> np.ndarray:
    if radius <= 0:
        raise ConfigError("disk radius must be > 0")
    r = int(radius)
    ii, jj = np.mgrid[-r:r + 1, -r:r + 1]
    k = (ii * ii + jj * jj <= r * r).astype(np.float64)
    return k / k.sum()


def _average_kernel(size: int) -> np.ndarray:
    if size <= 0 or size % 2 == 0:
        raise ConfigError("average window must be odd and positive")
    return np.full((size, size), 1.0 / (size * size))


def _gaussian_kernel(sigma: float, size: int = 5) -> np.ndarray:
    if sigma <= 0:
        raise ConfigError("gaussian sigma must be > 0")
    if size <= 0 or size % 2 == 0:
        raise ConfigError("gaussian support must be odd and positive")
    half = size // 2
    ii, jj = np.mgrid[-half:half + 1, -half:half + 1]
    k = np.exp(-(ii * ii + jj * jj) / (2.0 * sigma * sigma))
    return k / k.sum()


def _motion_kernel(length: int, angle_deg: float) -> np.ndarray:
    if length <= 0:
        raise ConfigError("motion length must be > 0")
    n = int(length) | 1                    # odd support
    k = np.zeros((n, n))
    theta = math.radians(angle_deg)
    half = (n - 1) / 2
    for t in np.linspace(-half, half, 4 * n):
        i = round(half - t * math.sin(theta))
        j = round(half + t * math.cos(theta))
        k[int(i), int(j)] = 1.0
    return k / k.sum()


@dataclass(frozen=True)
class AffineSpec:
    """2x3 matrix [linear | translation] in (row, col), applied about the center."""

    matrix: tuple

    def __post_init__(self):
        m = self.as_array()
        if m.shape != (2, 3):
            raise ConfigError(f"affine matrix must be 2x3, got {m.shape}")
        if abs(np.linalg.det(m[:, :2])) <= 1e-6:
            raise ConfigError("affine linear part is singular")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=np.float64).reshape(2, 3)

    @staticmethod
    def identity():
        return AffineSpec(((1, 0, 0), (0, 1, 0)))

    @staticmethod
    def horizontal_mirror():
        return AffineSpec(((1, 0, 0), (0, -1, 0)))

    @staticmethod
    def rotation(deg: float):
        c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
        return AffineSpec(((c, s, 0), (-s, c, 0)))

    @staticmethod
    def scaling(factor: float):
        return AffineSpec(((factor, 0, 0), (0, factor, 0)))

    @staticmethod
    def translation(d_row: float, d_col: float):
        return AffineSpec(((1, 0, d_row), (0, 1, d_col)))


def apply_filter(image, spec: FilterSpec) -> np.ndarray:
    """Correlate each channel with the filter kernel; edges replicate."""
    img = check_image(image, shape=None)
    k = spec.kernel()
    out = np.stack([ndimage.correlate(ch, k, mode="nearest") for ch in img.astype(np.float64)])
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def apply_affine(image, spec: AffineSpec) -> np.ndarray:
    """Bilinear warp about the image center with edge replication."""
    img = check_image(image, shape=None)
    m = spec.as_array()
    lin, t = m[:, :2], m[:, 2]
    h, w = img.shape[1:]
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    inv = np.linalg.inv(lin)
    offset = center - inv @ (center + t)
    out = np.stack([
        ndimage.affine_transform(ch, inv, offset=offset, order=1, mode="nearest")
        for ch in img.astype(np.float64)
    ])
    return np.clip(out, 0.0, 1.0).astype(np.float32)


@dataclass(frozen=True)
class AugmentParams:
    """Tunable filter/affine settings; the defaults give the standard 5x6 grid."""

    disk_radius: int = 2
    average_size: int = 3
    gaussian_sigma: float = 1.0
    gaussian_size: int = 5
    unsharp_amount: float = 0.8
    motion_length: int = 5
    motion_angle_deg: float = 0.0
    rotation_deg: float = 5.0
    scale: float = 1.05
    translate_px: float = 2.0

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        bad = set(data) - known
        if bad:
            raise ConfigError(f"unknown augmentation settings: {sorted(bad)}")
        return cls(**data)

    def filters(self):
        return (
            FilterSpec("disk", radius=self.disk_radius),
            FilterSpec("average", size=self.average_size),
            FilterSpec("gaussian", sigma=self.gaussian_sigma, size=self.gaussian_size),
            FilterSpec("unsharp", amount=self.unsharp_amount, sigma=self.gaussian_sigma,
                       size=self.gaussian_size),
            FilterSpec("motion", length=self.motion_length, angle=self.motion_angle_deg),
        )

    def affines(self):
        return (
            AffineSpec.identity(),
            AffineSpec.horizontal_mirror(),
            AffineSpec.rotation(self.rotation_deg),
            AffineSpec.rotation(-self.rotation_deg),
            AffineSpec.scaling(self.scale),
            AffineSpec.translation(self.translate_px, self.translate_px),
        )


def augment_image(image, params: AugmentParams = AugmentParams()) -> list:
    """Every (filter, affine) combination, filter first: exactly 30 variants."""
    img = check_image(image, shape=None)
    out = []
    for f in params.filters():
        filtered = apply_filter(img, f)
        for a in params.affines():
            out.append(apply_affine(filtered, a))
    return out
