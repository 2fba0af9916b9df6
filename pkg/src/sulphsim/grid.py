"""Uniform vertex-centered grid on the unit square with boundary tagging.

Nodes sit at (i*hx, j*hy) with lexicographic index p = j*nx + i.  Each of
the four boundary edges is tagged exposed (Robin exchange with the ambient
concentration) or isolated (homogeneous Neumann); at most one edge may be
exposed, and in the reference configuration it is the left one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

LINE_ALIGN_TOL = 1e-12


class Edge(Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


class EdgeTag(Enum):
    EXPOSED = "exposed"
    ISOLATED = "isolated"


DEFAULT_TAGS = {
    Edge.LEFT: EdgeTag.EXPOSED,
    Edge.RIGHT: EdgeTag.ISOLATED,
    Edge.BOTTOM: EdgeTag.ISOLATED,
    Edge.TOP: EdgeTag.ISOLATED,
}


@dataclass
class Grid2D:
    nx: int
    ny: int
    tags: dict[Edge, EdgeTag] = field(default_factory=lambda: dict(DEFAULT_TAGS))

    @property
    def hx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def index(self, i: int, j: int) -> int:
        return j * self.nx + i

    def ij(self, p: int) -> tuple[int, int]:
        return p % self.nx, p // self.nx

    def x1(self) -> np.ndarray:
        """x1 coordinate of every node, lexicographic order."""
        return np.tile(np.arange(self.nx) * self.hx, self.ny)

    def x2(self) -> np.ndarray:
        return np.repeat(np.arange(self.ny) * self.hy, self.nx)

    def axis_weights(self, n: int, h: float) -> np.ndarray:
        """Trapezoidal weights along one axis: h/2 at the ends, h inside."""
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        return w

    def node_volumes(self) -> np.ndarray:
        """Dual-cell areas (2D trapezoidal quadrature weights), length nx*ny."""
        wx = self.axis_weights(self.nx, self.hx)
        wy = self.axis_weights(self.ny, self.hy)
        return (wy[:, None] * wx[None, :]).ravel()

    def exposed_edge(self) -> Edge | None:
        for e, t in self.tags.items():
            if t is EdgeTag.EXPOSED:
                return e
        return None

    def exposed_trace(self) -> "BoundaryTrace | None":
        e = self.exposed_edge()
        return None if e is None else boundary_trace(self, e)


@dataclass
class BoundaryTrace:
    """Nodes of one boundary edge, ordered by the free coordinate.

    weights are trapezoidal arc-length weights (h/2 at the trace ends, h
    inside) and sum to the edge length 1.
    """

    edge: Edge
    indices: np.ndarray
    coords: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def build_grid(nx: int, ny: int, tags: dict[Edge, EdgeTag] | None = None) -> Grid2D:
    if nx < 3 or ny < 3:
        raise ValueError(f"grid needs nx, ny >= 3 (got nx={nx}, ny={ny})")
    full_tags = dict(DEFAULT_TAGS)
    if tags is not None:
        full_tags.update(tags)
    n_exposed = sum(1 for t in full_tags.values() if t is EdgeTag.EXPOSED)
    if n_exposed > 1:
        raise ValueError("at most one exposed edge is supported")
    return Grid2D(nx=nx, ny=ny, tags=full_tags)


def boundary_trace(grid: Grid2D, edge: Edge) -> BoundaryTrace:
    nx, ny = grid.nx, grid.ny
    if edge is Edge.LEFT:
        idx = np.arange(ny) * nx
        coords = np.arange(ny) * grid.hy
        w = grid.axis_weights(ny, grid.hy)
    elif edge is Edge.RIGHT:
        idx = np.arange(ny) * nx + (nx - 1)
        coords = np.arange(ny) * grid.hy
        w = grid.axis_weights(ny, grid.hy)
    elif edge is Edge.BOTTOM:
        idx = np.arange(nx)
        coords = np.arange(nx) * grid.hx
        w = grid.axis_weights(nx, grid.hx)
    else:
        idx = np.arange(nx) + (ny - 1) * nx
        coords = np.arange(nx) * grid.hx
        w = grid.axis_weights(nx, grid.hx)
    return BoundaryTrace(edge=edge, indices=idx, coords=coords, weights=w)


@dataclass(frozen=True)
class ProfileLine:
    """A grid-aligned sampling line: vertical means constant x1."""

    orientation: str  # "vertical" | "horizontal"
    coord: float

    def __post_init__(self):
        if self.orientation not in ("vertical", "horizontal"):
            raise ValueError(f"unknown profile orientation {self.orientation!r}")


def _aligned_index(coord: float, n: int, h: float, what: str) -> int:
    k = coord / h
    kr = int(round(k))
    if kr < 0 or kr >= n or abs(coord - kr * h) > LINE_ALIGN_TOL:
        raise ValueError(
            f"{what}={coord} is not a grid line (spacing {h}); "
            "profile lines must be node-aligned, no interpolation is done"
        )
    return kr


def extract_profile(field: np.ndarray, grid: Grid2D, line: ProfileLine):
    """Sample a nodal field along a grid line.

    Returns (coords, values) ordered by the free coordinate.  The line must
    coincide with a grid line to within 1e-12.
    """
    field = np.asarray(field)
    if field.shape != (grid.n_nodes,):
        raise ValueError(f"field has shape {field.shape}, expected ({grid.n_nodes},)")
    f2 = field.reshape(grid.ny, grid.nx)
    if line.orientation == "vertical":
        i = _aligned_index(line.coord, grid.nx, grid.hx, "x1")
        return np.arange(grid.ny) * grid.hy, f2[:, i].copy()
    j = _aligned_index(line.coord, grid.ny, grid.hy, "x2")
    return np.arange(grid.nx) * grid.hx, f2[j, :].copy()
