"""Screen-space geometry for the table: convexity checks, point-in-quad
tests, and the homography that maps the table quad onto a unit square so
bounce points can be binned into a 3x3 placement grid per table half.

Grid convention: u runs along the table length (0 at the left/A end, 1 at
the right/B end), v across the width. Rows index depth from the net
(row 0 touches the net, row 2 is the end line); columns index the lateral
position (col 0 at v=0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Point = tuple[float, float]

_EPS = 1e-9


class GeometryError(ValueError):
    pass


def is_convex_quad(quad: tuple[Point, ...]) -> bool:
    """True when the 4 points (in order) form a convex, non-degenerate quad."""
    if len(quad) != 4:
        return False
    signs = []
    for i in range(4):
        ax, ay = quad[i]
        bx, by = quad[(i + 1) % 4]
        cx, cy = quad[(i + 2) % 4]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) < _EPS:
            return False
        signs.append(cross > 0)
    return all(signs) or not any(signs)


def point_in_convex_polygon(point: Point, polygon: tuple[Point, ...]) -> bool:
    """Boundary-inclusive containment test for a convex polygon."""
    px, py = point
    sign = 0
    for i in range(len(polygon)):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % len(polygon)]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if abs(cross) < _EPS:
            continue
        side = 1 if cross > 0 else -1
        if sign == 0:
            sign = side
        elif side != sign:
            return False
    return True


def canonical_corners(quad: tuple[Point, ...]) -> tuple[Point, Point, Point, Point]:
    """Order corners as (left-top, right-top, right-bottom, left-bottom).

    Left/right split by x (the camera views the table side-on, so the A end
    is the two smallest-x corners), then by y within each pair.
    """
    if len(quad) != 4:
        raise GeometryError("table quad must have exactly 4 corners")
    pts = sorted(quad, key=lambda p: (p[0], p[1]))
    left = sorted(pts[:2], key=lambda p: p[1])
    right = sorted(pts[2:], key=lambda p: p[1])
    return left[0], right[0], right[1], left[1]


def _homography(src: list[Point], dst: list[Point]) -> np.ndarray:
    """3x3 projective transform mapping the 4 src points onto dst."""
    rows = []
    rhs = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        rhs.append(u)
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        rhs.append(v)
    sol = np.linalg.solve(np.array(rows, dtype=float), np.array(rhs, dtype=float))
    return np.array([[sol[0], sol[1], sol[2]],
                     [sol[3], sol[4], sol[5]],
                     [sol[6], sol[7], 1.0]])


def _apply(h: np.ndarray, p: Point) -> Point:
    vec = h @ np.array([p[0], p[1], 1.0])
    if abs(vec[2]) < _EPS:
        raise GeometryError("degenerate projective mapping")
    return float(vec[0] / vec[2]), float(vec[1] / vec[2])


@dataclass(frozen=True)
class PlacementCell:
    """A 3x3 grid cell on one table half, plus the contact point."""

    half: str  # "A" | "B"
    row: int   # depth from net: 0 = at the net, 2 = end line
    col: int   # lateral: 0..2
    point: Point

    def key(self) -> tuple[str, int, int]:
        return (self.half, self.row, self.col)

    def to_dict(self) -> dict:
        return {"half": self.half, "row": self.row, "col": self.col,
                "point": [self.point[0], self.point[1]]}

    @classmethod
    def from_dict(cls, d: dict) -> "PlacementCell":
        return cls(half=d["half"], row=int(d["row"]), col=int(d["col"]),
                   point=(float(d["point"][0]), float(d["point"][1])))


END_LINE_ROW = 2


class TableGrid:
    """Maps between screen space and the 3x3-per-half placement grid."""

    def __init__(self, quad: tuple[Point, ...], net_x: float):
        corners = canonical_corners(quad)
        if not is_convex_quad(corners):
            raise GeometryError("table quad is not convex")
        self.quad = corners
        self.net_x = float(net_x)
        unit = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        self._to_unit = _homography(list(corners), unit)
        self._to_screen = _homography(unit, list(corners))
        cy = sum(p[1] for p in corners) / 4.0
        u_net, _ = _apply(self._to_unit, (self.net_x, cy))
        if not 0.0 < u_net < 1.0:
            raise GeometryError("net plane lies outside the table quad")
        self._u_net = u_net

    def contains(self, point: Point) -> bool:
        return point_in_convex_polygon(point, self.quad)

    def half_of(self, point: Point) -> str:
        return "A" if point[0] < self.net_x else "B"

    def cell_of(self, point: Point) -> PlacementCell:
        """Placement cell of a screen point inside the table quad."""
        if not self.contains(point):
            raise GeometryError(f"point {point} is outside the table quad")
        u, v = _apply(self._to_unit, point)
        u = min(max(u, 0.0), 1.0)
        v = min(max(v, 0.0), 1.0)
        if u < self._u_net:
            half = "A"
            depth = (self._u_net - u) / self._u_net
        else:
            half = "B"
            depth = (u - self._u_net) / (1.0 - self._u_net)
        row = min(2, int(depth * 3.0))
        col = min(2, int(v * 3.0))
        return PlacementCell(half=half, row=row, col=col, point=point)

    def _cell_u(self, half: str, row: int, frac: float) -> float:
        depth = (row + frac) / 3.0
        if half == "A":
            return self._u_net * (1.0 - depth)
        return self._u_net + (1.0 - self._u_net) * depth

    def cell_center(self, half: str, row: int, col: int) -> Point:
        u = self._cell_u(half, row, 0.5)
        v = (col + 0.5) / 3.0
        return _apply(self._to_screen, (u, v))

    def cell_polygon(self, half: str, row: int, col: int) -> tuple[Point, Point, Point, Point]:
        u0 = self._cell_u(half, row, 0.0)
        u1 = self._cell_u(half, row, 1.0)
        v0 = col / 3.0
        v1 = (col + 1) / 3.0
        return (
            _apply(self._to_screen, (u0, v0)),
            _apply(self._to_screen, (u1, v0)),
            _apply(self._to_screen, (u1, v1)),
            _apply(self._to_screen, (u0, v1)),
        )

    def half_cells(self, half: str) -> list[tuple[str, int, int]]:
        return [(half, row, col) for row in range(3) for col in range(3)]

    def opponent_half(self, half: str) -> str:
        return "B" if half == "A" else "A"
