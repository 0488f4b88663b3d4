"""Rectangular cell-centered grid domain and field containers."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridDomain:
    """Rectangle [x0, x1] x [y0, y1] split into nx * ny square cells.

    Fields live at cell centers.  The outermost cell ring is the boundary
    mask; Dirichlet fields vanish there.  ``star_radius`` is the radius of a
    ball about the center with respect to which the domain is star-shaped
    (half the shorter edge for a rectangle).
    """

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int
    star_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("need at least 3 cells per direction")
        hx = (self.x1 - self.x0) / self.nx
        hy = (self.y1 - self.y0) / self.ny
        if hx <= 0 or abs(hx - hy) > 1e-12 * max(abs(hx), abs(hy)):
            raise ValueError("cells must be square: (x1-x0)/nx == (y1-y0)/ny")
        if self.star_radius is None:
            object.__setattr__(
                self, "star_radius", 0.5 * min(self.x1 - self.x0, self.y1 - self.y0)
            )

    @property
    def h(self):
        return (self.x1 - self.x0) / self.nx

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def cell_area(self):
        return self.h * self.h

    @property
    def center(self):
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def cell_centers(self):
        """Axes of cell-center coordinates: (xc (nx,), yc (ny,))."""
        xc = self.x0 + (np.arange(self.nx) + 0.5) * self.h
        yc = self.y0 + (np.arange(self.ny) + 0.5) * self.h
        return xc, yc

    def meshgrid(self):
        xc, yc = self.cell_centers()
        return np.meshgrid(xc, yc)

    def boundary_mask(self):
        m = np.zeros(self.shape, dtype=bool)
        m[0, :] = m[-1, :] = True
        m[:, 0] = m[:, -1] = True
        return m

    def interior_mask(self):
        return ~self.boundary_mask()

    def to_json(self):
        return {
            "extent": [self.x0, self.x1, self.y0, self.y1],
            "nx": self.nx,
            "ny": self.ny,
            "star_radius": self.star_radius,
        }

    @classmethod
    def from_json(cls, obj):
        x0, x1, y0, y1 = obj["extent"]
        return cls(x0, x1, y0, y1, int(obj["nx"]), int(obj["ny"]),
                   obj.get("star_radius"))


def unit_square(n, star_radius=None):
    return GridDomain(0.0, 1.0, 0.0, 1.0, n, n, star_radius)


def _check_values(domain, values, ncomp):
    values = np.asarray(values, dtype=np.float64)
    want = domain.shape if ncomp == 1 else (ncomp,) + domain.shape
    if values.shape != want:
        raise ValueError(f"field shape {values.shape} != {want}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field values must be finite")
    return values


@dataclass(frozen=True)
class ScalarField:
    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.domain, self.values, 1))

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def from_function(cls, domain, f, dirichlet=False):
        X, Y = domain.meshgrid()
        vals = np.broadcast_to(np.asarray(f(X, Y), dtype=np.float64), domain.shape).copy()
        if dirichlet:
            vals[domain.boundary_mask()] = 0.0
        return cls(domain, vals)

    def is_dirichlet(self, tol=0.0):
        return bool(np.all(np.abs(self.values[self.domain.boundary_mask()]) <= tol))


@dataclass(frozen=True)
class VectorField:
    """Two-component field; values has shape (2, ny, nx)."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.domain, self.values, 2))

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros((2,) + domain.shape))

    @classmethod
    def constant(cls, domain, v):
        vals = np.empty((2,) + domain.shape)
        vals[0] = v[0]
        vals[1] = v[1]
        return cls(domain, vals)

    @property
    def x(self):
        return self.values[0]

    @property
    def y(self):
        return self.values[1]

    def magnitude(self):
        return np.hypot(self.values[0], self.values[1])
