"""Quadrature grids and sampled radial/spectral profiles.

A RadialGrid holds plain dr-weights on [0, R]; measure factors (sinh^{n-1},
ball weights, Plancherel densities) are applied by callers. Grids are
composite Gauss-Legendre: uniform panels for transform-grade resolution and
geometric panels for the wide-range bubble integrals.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ParameterError, SupportError


class GridKind(enum.Enum):
    HYPERBOLIC_GEODESIC = "hyperbolic_geodesic"
    EUCLIDEAN = "euclidean"


class Space(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    weights: np.ndarray
    kind: GridKind
    domain_end: Optional[float] = None   # right edge of the covered interval

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ParameterError("grid nodes/weights must be matching 1-d arrays")
        if not np.all(np.diff(nodes) > 0.0) or not np.all(nodes > 0.0):
            raise ParameterError("grid nodes must be strictly increasing and positive")
        if not np.all(weights > 0.0):
            raise ParameterError("grid weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.domain_end is None:
            object.__setattr__(self, "domain_end", float(nodes[-1]))

    @property
    def r_max(self) -> float:
        return float(self.domain_end)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def fingerprint(self):
        """Hashable identity used by the spherical-function matrix cache."""
        return (self.kind, self.nodes.size, hash(self.nodes.tobytes()))


def _panels_to_grid(edges, nodes_per_panel, kind):
    x, w = leggauss(nodes_per_panel)
    lo = edges[:-1]
    hi = edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return RadialGrid(nodes, weights, kind, domain_end=float(edges[-1]))


def uniform_grid(r_max: float, kind: GridKind, panel_width: float = 0.05,
                 nodes_per_panel: int = 16) -> RadialGrid:
    """Composite Gauss-Legendre grid with (near-)uniform panels on [0, r_max]."""
    if not r_max > 0.0:
        raise ParameterError(f"r_max must be > 0, got {r_max}")
    n_panels = max(1, int(np.ceil(r_max / panel_width)))
    edges = np.linspace(0.0, r_max, n_panels + 1)
    return _panels_to_grid(edges, nodes_per_panel, kind)


def geometric_grid(r_max: float, kind: GridKind, first_width: float,
                   growth: float = 1.2, nodes_per_panel: int = 16) -> RadialGrid:
    """Panels growing geometrically from first_width; for wide-range integrands."""
    if not (r_max > 0.0 and first_width > 0.0 and growth > 1.0):
        raise ParameterError("geometric_grid needs r_max, first_width > 0 and growth > 1")
    edges = [0.0]
    width = first_width
    while edges[-1] < r_max:
        edges.append(min(edges[-1] + width, r_max))
        width *= growth
    return _panels_to_grid(np.asarray(edges), nodes_per_panel, kind)


def refine_panels(edges, max_width):
    """Split panel edges so no panel exceeds max_width (array in/out)."""
    out = [edges[0]]
    for hi in edges[1:]:
        lo = out[-1]
        k = max(1, int(np.ceil((hi - lo) / max_width)))
        out.extend(np.linspace(lo, hi, k + 1)[1:])
    return np.asarray(out)


@dataclass(frozen=True)
class RadialFunction:
    """A radial profile sampled on a quadrature grid.

    values must vanish at nodes beyond support_radius. The optional profile
    callable remembers the analytic formula the samples came from, which
    lets pushforwards (conformal lift, regridding) stay exact.
    """

    grid: RadialGrid
    values: np.ndarray
    support_radius: float
    space: Space
    profile: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ParameterError("values must match the grid nodes")
        if not np.all(np.isfinite(values)):
            raise ParameterError("values must be finite")
        outside = self.grid.nodes > self.support_radius
        if np.any(values[outside] != 0.0):
            raise ParameterError("values must vanish beyond support_radius")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_profile(cls, fn, grid: RadialGrid, support_radius: float, space: Space):
        nodes = grid.nodes
        values = np.where(nodes <= support_radius, fn(nodes), 0.0)
        return cls(grid, values, float(support_radius), space, profile=fn)

    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    def require_compact_support(self):
        if not np.isfinite(self.support_radius):
            raise SupportError("operation requires compactly supported data")


@dataclass(frozen=True)
class SpectralProfile:
    """Samples of a spherical/Fourier transform on a frequency grid."""

    beta_grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.beta_grid.nodes.shape:
            raise ParameterError("values must match the frequency grid")
        if not np.all(np.isfinite(values)):
            raise ParameterError("spectral values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def beta_max(self) -> float:
        return self.beta_grid.r_max
