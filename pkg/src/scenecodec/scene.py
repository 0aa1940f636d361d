"""Synthetic visual domain: scene graphs, deterministic rendering, detection.

A scene is 1..4 objects on a 4x4 placement grid. Rendering paints each
object centered in its cell with an exact palette color on a flat
background; detection inverts that by connected-component labeling and
fixed-threshold classification. Detection is only guaranteed for images
produced by :func:`render`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .core import Image
from .errors import (
    AmbiguousSceneError,
    FormatError,
    NoObjectsError,
    ShapeClassificationError,
    TooManyObjectsError,
)

GRID = 4
MIN_RENDER_SIZE = 64

BACKGROUND = (200, 200, 200)

# Detection constants. The Chebyshev tolerance separates the background
# from every palette entry (closest is white at distance 55); the size
# threshold is the midpoint between the large and small design areas as
# a fraction of the cell area; shape thresholds are on circularity
# (4*pi*area/perimeter^2 of the traced boundary polygon) and on the
# bounding-box fill ratio.
BACKGROUND_CHEBYSHEV_TOLERANCE = 16
SIZE_AREA_FRACTION = 0.5 * 0.6
CIRCULARITY_THRESHOLD = 0.85
SQUARE_FILL_MIN = 0.9
TRIANGLE_FILL_RANGE = (0.4, 0.7)
CENTROID_BOUNDARY_MARGIN = 2.0

LARGE_FRACTION = 0.8
SMALL_FRACTION = 0.4

UNMATCHED_OBJECT_COST = 4


class Shape(str, enum.Enum):
    CIRCLE = "circle"
    SQUARE = "square"
    TRIANGLE = "triangle"


class Color(str, enum.Enum):
    RED = "red"
    GREEN = "green"
    BLUE = "blue"
    YELLOW = "yellow"
    CYAN = "cyan"
    MAGENTA = "magenta"
    WHITE = "white"
    BLACK = "black"


class Size(str, enum.Enum):
    SMALL = "small"
    LARGE = "large"


PALETTE: dict[Color, tuple[int, int, int]] = {
    Color.RED: (255, 0, 0),
    Color.GREEN: (0, 255, 0),
    Color.BLUE: (0, 0, 255),
    Color.YELLOW: (255, 255, 0),
    Color.CYAN: (0, 255, 255),
    Color.MAGENTA: (255, 0, 255),
    Color.WHITE: (255, 255, 255),
    Color.BLACK: (0, 0, 0),
}


@dataclass(frozen=True)
class SceneObject:
    shape: Shape
    color: Color
    size: Size
    cell: tuple[int, int]  # (column, row)

    def __post_init__(self):
        col, row = self.cell
        if not (0 <= col < GRID and 0 <= row < GRID):
            raise ValueError(f"cell {self.cell} outside the {GRID}x{GRID} grid")
        object.__setattr__(self, "cell", (int(col), int(row)))
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "color", Color(self.color))
        object.__setattr__(self, "size", Size(self.size))


@dataclass(frozen=True)
class SceneGraph:
    """Ordered object list; construction sorts into canonical (row, column)
    order and rejects duplicate cells."""

    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        objs = tuple(sorted(self.objects, key=lambda o: (o.cell[1], o.cell[0])))
        if not 1 <= len(objs) <= GRID:
            raise ValueError(f"scene must hold 1..{GRID} objects, got {len(objs)}")
        cells = [o.cell for o in objs]
        if len(set(cells)) != len(cells):
            raise ValueError("two objects occupy the same cell")
        object.__setattr__(self, "objects", objs)

    def to_text(self) -> str:
        """One object per line: "shape color size col row"."""
        return "\n".join(
            f"{o.shape.value} {o.color.value} {o.size.value} {o.cell[0]} {o.cell[1]}"
            for o in self.objects
        )

    @classmethod
    def from_text(cls, text: str) -> "SceneGraph":
        objects = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise FormatError(f"scene line {lineno}: expected 5 fields")
            try:
                objects.append(
                    SceneObject(
                        shape=Shape(parts[0]),
                        color=Color(parts[1]),
                        size=Size(parts[2]),
                        cell=(int(parts[3]), int(parts[4])),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"scene line {lineno}: {exc}") from None
        if not objects:
            raise FormatError("scene text holds no objects")
        return cls(tuple(objects))


def render(s: SceneGraph, width: int, height: int) -> Image:
    """Deterministic raster of a scene graph.

    Each object is centered in its grid cell; a large object spans 80%
    of the cell extent and a small one 40%. Pixels are painted when
    their center lies inside the shape.
    """
    if width < MIN_RENDER_SIZE or height < MIN_RENDER_SIZE:
        raise ValueError(f"render size must be at least {MIN_RENDER_SIZE} pixels")
    if width % GRID or height % GRID:
        raise ValueError(f"render size must be divisible by {GRID}")
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:, :] = BACKGROUND
    cw, ch = width // GRID, height // GRID
    for obj in s.objects:
        col, row = obj.cell
        x0, y0 = col * cw, row * ch
        # pixel centers of the cell, in image coordinates
        xs = np.arange(cw, dtype=np.float64) + x0 + 0.5
        ys = np.arange(ch, dtype=np.float64) + y0 + 0.5
        X, Y = np.meshgrid(xs, ys)
        cx, cy = x0 + cw / 2.0, y0 + ch / 2.0
        frac = LARGE_FRACTION if obj.size is Size.LARGE else SMALL_FRACTION
        extent = frac * min(cw, ch)
        if obj.shape is Shape.CIRCLE:
            r = extent / 2.0
            mask = (X - cx) ** 2 + (Y - cy) ** 2 <= r * r
        elif obj.shape is Shape.SQUARE:
            half = extent / 2.0
            mask = (np.abs(X - cx) <= half) & (np.abs(Y - cy) <= half)
        else:  # triangle, apex up
            apex_y = cy - extent / 2.0
            t = Y - apex_y
            mask = (t >= 0) & (t <= extent) & (np.abs(X - cx) <= t / 2.0)
        arr[y0 : y0 + ch, x0 : x0 + cw][mask] = PALETTE[obj.color]
    return Image(width=width, height=height, pixels=arr)


# Clockwise Moore neighborhood starting at north, image y axis pointing down.
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def _trace_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    """Outer boundary pixels of an 8-connected component, clockwise.

    Moore-neighbor tracing; terminates when the (pixel, backtrack)
    state repeats, so thin protrusions are walked on both sides.
    """
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    first = np.lexsort((xs, ys))[0]
    start = (int(ys[first]), int(xs[first]))
    contour: list[tuple[int, int]] = []
    cur = start
    b_idx = 6  # backtrack points west of the start pixel
    seen: set[tuple[tuple[int, int], int]] = set()
    while (cur, b_idx) not in seen:
        seen.add((cur, b_idx))
        contour.append(cur)
        nxt = None
        for k in range(1, 9):
            idx = (b_idx + k) % 8
            dy, dx = _RING[idx]
            y, x = cur[0] + dy, cur[1] + dx
            if 0 <= y < h and 0 <= x < w and mask[y, x]:
                nxt = (y, x)
                prev = (idx - 1) % 8
                dy_p, dx_p = _RING[prev]
                back = (cur[0] + dy_p - y, cur[1] + dx_p - x)
                b_idx = _RING.index(back)
                break
        if nxt is None:
            break  # isolated pixel
        cur = nxt
    return contour


def _polygon_measures(contour: list[tuple[int, int]]) -> tuple[float, float]:
    """(perimeter, area) of the closed polygon through boundary pixel centers.

    Straight steps count 1, diagonal steps sqrt(2); area by the shoelace
    formula. Degenerate contours give zeros.
    """
    n = len(contour)
    if n < 3:
        return (float(2 * (n - 1)) if n == 2 else 0.0, 0.0)
    perimeter = 0.0
    area2 = 0.0
    for i in range(n):
        y0, x0 = contour[i]
        y1, x1 = contour[(i + 1) % n]
        step = abs(y1 - y0) + abs(x1 - x0)
        perimeter += math.sqrt(2.0) if step == 2 else float(step)
        area2 += x0 * y1 - x1 * y0
    return perimeter, abs(area2) / 2.0


def _classify_shape(mask: np.ndarray, area: int) -> Shape:
    contour = _trace_boundary(mask)
    perimeter, poly_area = _polygon_measures(contour)
    if perimeter > 0 and poly_area > 0:
        circularity = 4.0 * math.pi * poly_area / (perimeter * perimeter)
        if circularity >= CIRCULARITY_THRESHOLD:
            return Shape.CIRCLE
    ys, xs = np.nonzero(mask)
    bbox_area = (ys.max() - ys.min() + 1) * (xs.max() - xs.min() + 1)
    fill = area / bbox_area
    if fill >= SQUARE_FILL_MIN:
        return Shape.SQUARE
    if TRIANGLE_FILL_RANGE[0] <= fill < TRIANGLE_FILL_RANGE[1]:
        return Shape.TRIANGLE
    raise ShapeClassificationError(
        f"component with fill ratio {fill:.3f} matches no shape signature"
    )


def _nearest_color(mean_rgb: np.ndarray) -> Color:
    best, best_d = None, None
    for color, rgb in PALETTE.items():
        d = float(np.sum((mean_rgb - np.asarray(rgb, dtype=np.float64)) ** 2))
        if best_d is None or d < best_d:
            best, best_d = color, d
    return best


def analyze(img: Image) -> SceneGraph:
    """Detects a scene graph in a rendered image.

    Non-background pixels (Chebyshev distance from the background above
    the tolerance) are labeled into 8-connected components; each becomes
    one object via fixed-threshold color, size, shape, and cell rules.
    """
    if img.width % GRID or img.height % GRID:
        raise ValueError(f"image dimensions must be divisible by {GRID}")
    arr = img.pixels.astype(np.int16)
    cheb = np.abs(arr - np.asarray(BACKGROUND, dtype=np.int16)).max(axis=2)
    foreground = cheb > BACKGROUND_CHEBYSHEV_TOLERANCE
    labels, count = ndimage.label(foreground, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        raise NoObjectsError("image holds no foreground components")
    if count > GRID:
        raise TooManyObjectsError(f"{count} components exceed the {GRID}-object limit")
    cw, ch = img.width // GRID, img.height // GRID
    cell_area = cw * ch
    objects = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        mask = labels[sl] == k
        area = int(mask.sum())
        ys, xs = np.nonzero(mask)
        cx = float(xs.mean()) + sl[1].start + 0.5
        cy = float(ys.mean()) + sl[0].start + 0.5
        for coord, step in ((cx, cw), (cy, ch)):
            for line in range(1, GRID):
                if abs(coord - line * step) < CENTROID_BOUNDARY_MARGIN:
                    raise AmbiguousSceneError(
                        f"component centroid within {CENTROID_BOUNDARY_MARGIN} px "
                        "of a cell boundary"
                    )
        cell = (min(int(cx // cw), GRID - 1), min(int(cy // ch), GRID - 1))
        mean_rgb = img.pixels[sl][mask].mean(axis=0)
        size = Size.LARGE if area > SIZE_AREA_FRACTION * cell_area else Size.SMALL
        shape = _classify_shape(mask, area)
        objects.append(
            SceneObject(shape=shape, color=_nearest_color(mean_rgb), size=size, cell=cell)
        )
    if len({o.cell for o in objects}) != len(objects):
        raise AmbiguousSceneError("two components resolve to the same grid cell")
    return SceneGraph(tuple(objects))


def _pair_cost(a: SceneObject, b: SceneObject) -> int:
    return (
        (a.shape != b.shape)
        + (a.color != b.color)
        + (a.size != b.size)
        + (a.cell != b.cell)
    )


def scene_distance(a: SceneGraph, b: SceneGraph) -> int:
    """Minimum-cost bipartite matching distance between two scenes.

    Matching a pair costs the number of differing attributes among
    shape, color, size, and cell; an unmatched object costs 4.
    """
    na, nb = len(a.objects), len(b.objects)
    n = na + nb
    cost = np.zeros((n, n), dtype=np.int64)
    cost[:na, nb:] = UNMATCHED_OBJECT_COST
    cost[na:, :nb] = UNMATCHED_OBJECT_COST
    for i, oa in enumerate(a.objects):
        for j, ob in enumerate(b.objects):
            cost[i, j] = _pair_cost(oa, ob)
    rows, cols = linear_sum_assignment(cost)
    return int(cost[rows, cols].sum())
