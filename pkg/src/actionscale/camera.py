"""Scale-free visual observations: pinhole projection and quantized extractors.

Normalized image coordinates (x/z, y/z) are the internal currency; pixel
units only exist inside the quantizer. Three extractors produce the
unitless position-to-scale signal used by the estimators: reciprocal target
width, fixated-line height, and opening-edge coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, DegenerateTarget, OutOfView

__all__ = [
    "CameraSpec",
    "QuantizerState",
    "project_point",
    "quantize",
    "phi_target_width",
    "phi_line_height",
    "phi_opening_edges",
]

# The touching pipeline empirically fails below this projected width.
MIN_RELIABLE_WIDTH_PX = 6.0


@dataclass(frozen=True)
class CameraSpec:
    res_u: int
    res_v: int
    vfov_deg: float
    fps: float

    def __post_init__(self):
        if self.res_u < 2 or self.res_v < 2:
            raise ValueError("resolution must be at least 2x2 pixels")
        if not (0.0 < self.vfov_deg < 180.0):
            raise ValueError("vertical field of view must be in (0, 180) deg")
        if self.fps <= 0.0:
            raise ValueError("fps must be positive")

    @property
    def focal_px(self) -> float:
        """Pixels per unit of normalized coordinate (square pixels)."""
        return (self.res_v / 2.0) / math.tan(math.radians(self.vfov_deg) / 2.0)

    def half_extent(self, axis: str) -> float:
        """Half-width of the image in normalized coordinates along an axis."""
        res = self.res_v if axis == "v" else self.res_u
        return (res / 2.0) / self.focal_px


@dataclass
class QuantizerState:
    """Pixel rounding with a random boundary offset.

    ``delta`` shifts the rounding boundaries: p -> round(p + delta) - delta,
    applied in pixel units. ``saturated`` records whether the last call
    clipped at the image border.
    """

    delta: float = 0.0
    enabled: bool = True
    saturated: bool = False

    def __post_init__(self):
        if abs(self.delta) > 0.5:
            raise ValueError("quantizer offset must lie in [-0.5, 0.5]")


def project_point(x: np.ndarray, cam: CameraSpec) -> np.ndarray:
    """Pinhole projection with identity intrinsics: (X/Z, Y/Z)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("expected a 3-vector in the camera frame")
    if x[2] <= 0.0:
        raise BehindCamera(f"point depth {x[2]} <= 0")
    return x[:2] / x[2]


def quantize(p: float, cam: CameraSpec, q: QuantizerState, axis: str = "v") -> float:
    """Quantize one normalized coordinate to the camera's pixel grid.

    Converts to pixels, applies round(p_px + delta) - delta, converts back.
    Identity when the quantizer is disabled. Values landing outside the
    image saturate at the border (flagged on the quantizer state).
    """
    q.saturated = False
    if not q.enabled:
        return float(p)
    f = cam.focal_px
    p_px = p * f
    out_px = round(p_px + q.delta) - q.delta
    half_px = (cam.res_v if axis == "v" else cam.res_u) / 2.0
    if abs(out_px) > half_px:
        q.saturated = True
        out_px = math.copysign(half_px, out_px)
    return out_px / f


def phi_target_width(z: float, d: float, cam: CameraSpec, q: QuantizerState,
                     lateral: float = 0.0) -> float:
    """Reciprocal width of a flat, camera-parallel target: Phi = Z/d.

    Both target edges are quantized with the same per-frame offset; the
    returned sample is 1 / (normalized pixel width).
    """
    if z <= 0.0 or d <= 0.0:
        raise ValueError("distance and width must be positive")
    left = (lateral - d / 2.0) / z
    right = (lateral + d / 2.0) / z
    half = cam.half_extent("u")
    if left < -half or right > half:
        raise OutOfView(f"target edges [{left:.3f}, {right:.3f}] exceed +-{half:.3f}")
    width_px = (right - left) * cam.focal_px
    if width_px < 1.0:
        raise DegenerateTarget(f"target spans {width_px:.2f} px")
    if width_px < MIN_RELIABLE_WIDTH_PX:
        warnings.warn(f"target spans only {width_px:.1f} px; width estimates "
                      "are unreliable below 6 px", RuntimeWarning, stacklevel=2)
    left_q = quantize(left, cam, q, axis="u")
    right_q = quantize(right, cam, q, axis="u")
    return 1.0 / (right_q - left_q)


def phi_line_height(x2: float, x3: float, cam: CameraSpec,
                    q: QuantizerState) -> float:
    """Normalized vertical coordinate of a fixated horizontal line: X2/X3."""
    if x3 <= 0.0:
        raise BehindCamera(f"line distance {x3} <= 0")
    p = x2 / x3
    if abs(p) > cam.half_extent("v"):
        raise OutOfView(f"line at {p:.3f} outside +-{cam.half_extent('v'):.3f}")
    return quantize(p, cam, q, axis="v")


def phi_opening_edges(x_left: np.ndarray, x_right: np.ndarray,
                      cam: CameraSpec, q: QuantizerState) -> tuple[float, float]:
    """Normalized horizontal coordinates of an opening's two inner edges."""
    p_l = project_point(x_left, cam)
    p_r = project_point(x_right, cam)
    half = cam.half_extent("u")
    for p in (p_l[0], p_r[0]):
        if abs(p) > half:
            raise OutOfView(f"edge at {p:.3f} outside +-{half:.3f}")
    return (quantize(p_l[0], cam, q, axis="u"),
            quantize(p_r[0], cam, q, axis="u"))
