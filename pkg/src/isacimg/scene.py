"""ROI pixel grid, target placement, and the fine scatterer cloud.

The grid uses row-major indexing with y as the outer (row) axis and x as
the inner (column) axis: pixel n sits at row n // nx, column n % nx.  All
objects are immutable after construction.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonDivisibleROI, TargetOutOfBounds

_DIVISIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by centre and edge lengths."""

    cx: float
    cy: float
    lx: float
    ly: float

    @property
    def x_min(self):
        return self.cx - 0.5 * self.lx

    @property
    def x_max(self):
        return self.cx + 0.5 * self.lx

    @property
    def y_min(self):
        return self.cy - 0.5 * self.ly

    @property
    def y_max(self):
        return self.cy + 0.5 * self.ly

    @property
    def area(self):
        return self.lx * self.ly

    @property
    def diagonal(self):
        return math.hypot(self.lx, self.ly)

    def contains(self, x, y):
        return (self.x_min <= x <= self.x_max) and (self.y_min <= y <= self.y_max)


def _overlap_1d(a_min, a_max, b_min, b_max):
    return max(0.0, min(a_max, b_max) - max(a_min, b_min))


def rect_overlap_area(a: Rect, b: Rect) -> float:
    return _overlap_1d(a.x_min, a.x_max, b.x_min, b.x_max) * _overlap_1d(
        a.y_min, a.y_max, b.y_min, b.y_max
    )


@dataclass(frozen=True)
class PixelGrid:
    """Uniform pixel tessellation of a rectangular ROI.

    The ROI spans [origin_x, origin_x + L] x [origin_y, origin_y + W] and is
    cut into nx * ny pixels of size pixel_length x pixel_width.
    """

    roi_length: float
    roi_width: float
    pixel_length: float
    pixel_width: float
    origin: tuple = (0.0, 0.0)
    nx: int = field(init=False)
    ny: int = field(init=False)

    def __post_init__(self):
        for name in ("roi_length", "roi_width", "pixel_length", "pixel_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "nx", _exact_ratio(self.roi_length, self.pixel_length, "L/l_s"))
        object.__setattr__(self, "ny", _exact_ratio(self.roi_width, self.pixel_width, "W/w_s"))

    @property
    def n_pixels(self) -> int:
        return self.nx * self.ny

    def rowcol(self, index: int):
        if not 0 <= index < self.n_pixels:
            raise IndexError(f"pixel index {index} out of range")
        return index // self.nx, index % self.nx

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.ny and 0 <= col < self.nx):
            raise IndexError(f"pixel (row={row}, col={col}) out of range")
        return row * self.nx + col

    def center(self, index: int):
        row, col = self.rowcol(index)
        return (
            self.origin[0] + (col + 0.5) * self.pixel_length,
            self.origin[1] + (row + 0.5) * self.pixel_width,
        )

    def centers(self) -> np.ndarray:
        """All pixel centres, shape (n_pixels, 2), in index order."""
        cols = np.arange(self.nx)
        rows = np.arange(self.ny)
        cx = self.origin[0] + (cols + 0.5) * self.pixel_length
        cy = self.origin[1] + (rows + 0.5) * self.pixel_width
        gx, gy = np.meshgrid(cx, cy)  # y outer, x inner
        return np.column_stack([gx.ravel(), gy.ravel()])

    def index_of_point(self, x: float, y: float) -> int:
        """Pixel containing (x, y); boundary points go to the nearer pixel inside."""
        if not self.roi_rect().contains(x, y):
            raise TargetOutOfBounds(f"point ({x}, {y}) outside ROI")
        col = min(int((x - self.origin[0]) / self.pixel_length), self.nx - 1)
        row = min(int((y - self.origin[1]) / self.pixel_width), self.ny - 1)
        return self.index(row, col)

    def pixel_rect(self, index: int) -> Rect:
        cx, cy = self.center(index)
        return Rect(cx, cy, self.pixel_length, self.pixel_width)

    def roi_rect(self) -> Rect:
        return Rect(
            self.origin[0] + 0.5 * self.roi_length,
            self.origin[1] + 0.5 * self.roi_width,
            self.roi_length,
            self.roi_width,
        )

    def metadata(self) -> dict:
        return {
            "roi_length_m": self.roi_length,
            "roi_width_m": self.roi_width,
            "pixel_length_m": self.pixel_length,
            "pixel_width_m": self.pixel_width,
            "origin_m": list(self.origin),
            "nx": self.nx,
            "ny": self.ny,
            "n_pixels": self.n_pixels,
            "indexing": "row-major, y outer (row = n // nx), x inner (col = n % nx)",
        }


def _exact_ratio(total: float, step: float, label: str) -> int:
    ratio = total / step
    n = round(ratio)
    if n < 1 or abs(ratio - n) > _DIVISIBILITY_RTOL * ratio:
        raise NonDivisibleROI(f"{label} = {ratio} is not a positive integer")
    return int(n)


def build_grid(roi_length, roi_width, pixel_length, pixel_width, origin=(0.0, 0.0)) -> PixelGrid:
    """Tessellate the ROI; raises NonDivisibleROI unless L/l_s, W/w_s are integral."""
    return PixelGrid(roi_length, roi_width, pixel_length, pixel_width, tuple(origin))


@dataclass(frozen=True)
class TargetShape:
    """Point, rectangle, or cross scatterer.

    For a cross, `length` is the arm length and `width` the arm thickness;
    the shape is the union of an x-aligned length-by-width bar and a
    y-aligned width-by-length bar sharing the centre.
    """

    kind: str
    center: tuple
    length: float = 0.0
    width: float = 0.0
    coefficient: float = 1.0

    def __post_init__(self):
        if self.kind not in ("point", "rectangle", "cross"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if not 0.0 < self.coefficient <= 1.0:
            raise ValueError("coefficient must be in (0, 1]")
        if self.kind != "point" and (self.length <= 0 or self.width <= 0):
            raise ValueError("planar targets need positive length and width")

    def parts(self):
        """Component rectangles whose union is the target footprint."""
        cx, cy = self.center
        if self.kind == "point":
            return []
        if self.kind == "rectangle":
            return [Rect(cx, cy, self.length, self.width)]
        return [
            Rect(cx, cy, self.length, self.width),
            Rect(cx, cy, self.width, self.length),
        ]

    def bounding_rect(self) -> Rect:
        cx, cy = self.center
        if self.kind == "point":
            return Rect(cx, cy, 0.0, 0.0)
        if self.kind == "rectangle":
            return Rect(cx, cy, self.length, self.width)
        span = max(self.length, self.width)
        return Rect(cx, cy, span, span)

    def overlap_area(self, pixel: Rect) -> float:
        """Exact footprint-with-pixel overlap area (0 for point targets)."""
        parts = self.parts()
        if not parts:
            return 0.0
        area = sum(rect_overlap_area(p, pixel) for p in parts)
        if len(parts) == 2:
            a, b = parts
            core = Rect(
                0.5 * (max(a.x_min, b.x_min) + min(a.x_max, b.x_max)),
                0.5 * (max(a.y_min, b.y_min) + min(a.y_max, b.y_max)),
                min(a.x_max, b.x_max) - max(a.x_min, b.x_min),
                min(a.y_max, b.y_max) - max(a.y_min, b.y_min),
            )
            if core.lx > 0 and core.ly > 0:
                area -= rect_overlap_area(core, pixel)
        return area


@dataclass(frozen=True)
class ScatterField:
    """Per-pixel scattering coefficients plus detection ground truth.

    x[n] is the area-fraction-weighted coefficient in [0, 1]; occupancy[n]
    is True whenever any target overlaps pixel n at all, regardless of the
    fractional coefficient.
    """

    grid: PixelGrid
    x: np.ndarray
    occupancy: np.ndarray
    targets: tuple

    def __post_init__(self):
        for name in ("x", "occupancy"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def place_targets(grid: PixelGrid, targets) -> ScatterField:
    """Rasterize targets onto the grid.

    Each pixel gets coefficient * (overlap area) / (pixel area), clamped to
    [0, 1]; overlapping targets take the maximum.  Point targets stamp
    their full coefficient onto the single containing pixel.
    """
    x = np.zeros(grid.n_pixels)
    occupied = np.zeros(grid.n_pixels, dtype=bool)
    roi = grid.roi_rect()
    pixel_area = grid.pixel_length * grid.pixel_width

    for target in targets:
        bbox = target.bounding_rect()
        if not (
            roi.x_min <= bbox.x_min
            and bbox.x_max <= roi.x_max
            and roi.y_min <= bbox.y_min
            and bbox.y_max <= roi.y_max
        ):
            raise TargetOutOfBounds(f"{target.kind} target at {target.center} leaves the ROI")

        if target.kind == "point":
            n = grid.index_of_point(*target.center)
            x[n] = max(x[n], target.coefficient)
            occupied[n] = True
            continue

        col_lo = max(0, int((bbox.x_min - grid.origin[0]) / grid.pixel_length))
        col_hi = min(grid.nx - 1, int((bbox.x_max - grid.origin[0]) / grid.pixel_length))
        row_lo = max(0, int((bbox.y_min - grid.origin[1]) / grid.pixel_width))
        row_hi = min(grid.ny - 1, int((bbox.y_max - grid.origin[1]) / grid.pixel_width))
        for row in range(row_lo, row_hi + 1):
            for col in range(col_lo, col_hi + 1):
                n = grid.index(row, col)
                overlap = target.overlap_area(grid.pixel_rect(n))
                if overlap > 0.0:
                    value = min(1.0, target.coefficient * overlap / pixel_area)
                    x[n] = max(x[n], value)
                    occupied[n] = True

    return ScatterField(grid=grid, x=x, occupancy=occupied, targets=tuple(targets))


@dataclass(frozen=True)
class FineCloud:
    """Point-scatterer cloud standing in for the physical ground truth."""

    points: np.ndarray  # (P, 2)
    weights: np.ndarray  # (P,)
    subdivision: int

    def __post_init__(self):
        for name in ("points", "weights"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def rasterize_fine(field: ScatterField, subdivision: int) -> FineCloud:
    """Sample targets on a sub-pixel lattice of pitch (l_s/s, w_s/s).

    Every lattice point inside a planar target's footprint gets weight
    coefficient / s^2, so a fully covered pixel carries exactly its
    coefficient and an area fraction carries that fraction.  A point target
    contributes one cloud point at its exact position with its full
    coefficient, independent of the lattice.  Lattice points covered by
    several targets take the maximum weight, matching place_targets.
    """
    if subdivision < 1:
        raise ValueError("subdivision must be >= 1")
    grid = field.grid
    s = int(subdivision)
    pitch_x = grid.pixel_length / s
    pitch_y = grid.pixel_width / s
    per_pixel = s * s

    lattice_weights: dict = {}
    extra_points = []
    extra_weights = []

    for target in field.targets:
        if target.kind == "point":
            extra_points.append(target.center)
            extra_weights.append(target.coefficient)
            continue
        w = target.coefficient / per_pixel
        for part in target.parts():
            i_lo = max(0, int(np.floor((part.x_min - grid.origin[0]) / pitch_x - 0.5)))
            i_hi = min(grid.nx * s - 1, int(np.ceil((part.x_max - grid.origin[0]) / pitch_x)))
            j_lo = max(0, int(np.floor((part.y_min - grid.origin[1]) / pitch_y - 0.5)))
            j_hi = min(grid.ny * s - 1, int(np.ceil((part.y_max - grid.origin[1]) / pitch_y)))
            ii = np.arange(i_lo, i_hi + 1)
            jj = np.arange(j_lo, j_hi + 1)
            px = grid.origin[0] + (ii + 0.5) * pitch_x
            py = grid.origin[1] + (jj + 0.5) * pitch_y
            ii = ii[(px >= part.x_min) & (px <= part.x_max)]
            jj = jj[(py >= part.y_min) & (py <= part.y_max)]
            for j in jj:
                for i in ii:
                    key = (int(i), int(j))
                    prev = lattice_weights.get(key, 0.0)
                    if w > prev:
                        lattice_weights[key] = w

    n_lat = len(lattice_weights)
    points = np.zeros((n_lat + len(extra_points), 2))
    weights = np.zeros(n_lat + len(extra_points))
    for idx, ((i, j), w) in enumerate(sorted(lattice_weights.items())):
        points[idx, 0] = grid.origin[0] + (i + 0.5) * pitch_x
        points[idx, 1] = grid.origin[1] + (j + 0.5) * pitch_y
        weights[idx] = w
    for idx, (pt, w) in enumerate(zip(extra_points, extra_weights)):
        points[n_lat + idx] = pt
        weights[n_lat + idx] = w

    return FineCloud(points=points, weights=weights, subdivision=s)
