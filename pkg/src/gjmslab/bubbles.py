"""The standard bubble family, smooth cut-offs, and the Euclidean fractional
energy through radial Fourier (Hankel) analysis, plus the cut-off asymptotics
experiments built on them.

The energy of wide profiles (the truncated-bubble baseline in particular) is
computed with octave-banded quadrature: each frequency band integrates r only
out to where its own oscillation budget allows, behind a smooth sub-window,
which keeps every Bessel oscillation resolved without ever building an
r-grid of millions of nodes.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DegenerateData, ParameterError, SupportError, TailError
from .geometry import sphere_area
from .grids import GridKind, RadialFunction, RadialGrid, Space, SpectralProfile, geometric_grid
from .params import Params

PHASE_PER_PANEL = 18.0       # radians of Bessel phase a 16-node panel resolves
OSC_BUDGET = 4000.0          # max r*rho phase per frequency band (with sub-window)
BASELINE_RADII = (2000.0, 4000.0)   # window radii for the bubble-energy baseline

_GL16_X, _GL16_W = leggauss(16)
_GL48_X, _GL48_W = leggauss(48)


@dataclass(frozen=True)
class BubbleParams:
    """Bubble scale eps in (0,1) and cut-off radius delta in (0, 1/4)."""

    eps: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ParameterError(f"eps must lie in (0, 1), got {self.eps}")
        if not (0.0 < self.delta < 0.25):
            raise ParameterError(f"delta must lie in (0, 1/4), got {self.delta}")


def bubble(p: Params, bp: BubbleParams, r):
    """U_eps(r) = eps^-(n-2s)/2 (1 + (r/eps)^2)^-(n-2s)/2; decreasing, U(0)=1."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ParameterError("bubble requires r >= 0")
    q = (p.n - 2.0 * p.s) / 2.0
    out = bp.eps ** (-q) * (1.0 + (r / bp.eps) ** 2) ** (-q)
    return float(out) if out.ndim == 0 else out


def _mollifier_mass(t):
    """int_0^t exp(-1/(u(1-u))) du for t in [0, 1], vectorized (48-node GL)."""
    t = np.asarray(t, dtype=float)
    u = 0.5 * (_GL48_X + 1.0)                       # nodes on (0, 1)
    uu = np.multiply.outer(t, u)                    # scaled to (0, t)
    g = np.zeros_like(uu)
    inside = (uu > 0.0) & (uu < 1.0)
    g[inside] = np.exp(-1.0 / (uu[inside] * (1.0 - uu[inside])))
    return 0.5 * t * (g @ _GL48_W)


_MOLLIFIER_TOTAL = float(_mollifier_mass(np.asarray(1.0)))


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, value 1/2 at t = 1/2."""
    t = np.asarray(t, dtype=float)
    clipped = np.clip(t, 0.0, 1.0)
    return _mollifier_mass(clipped) / _MOLLIFIER_TOTAL


def smooth_window(r, r_on: float, r_off: float):
    """1 on [0, r_on], 0 beyond r_off, C-infinity in between."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - r_on) / (r_off - r_on))


def cutoff(delta: float, r):
    """The flat mollifier cut-off: 1 on [0, delta], 0 beyond 2*delta.

    Built from the normalized integral of exp(-1/(t(1-t))), so it is genuinely
    C-infinity and takes the exact value 1/2 at the midpoint 3*delta/2.
    """
    if not (0.0 < delta < 0.25):
        raise ParameterError(f"cutoff requires delta in (0, 1/4), got {delta}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ParameterError("cutoff requires r >= 0")
    out = smooth_window(r, delta, 2.0 * delta)
    return float(out) if out.ndim == 0 else out


def truncated_bubble_profile(p: Params, bp: BubbleParams):
    """r -> cutoff(delta, r) * U_eps(r), the standard compactly supported trial."""

    def fn(r):
        return cutoff(bp.delta, r) * bubble(p, bp, r)

    return fn


def bubble_grid(eps: float, r_max: float, nodes_per_panel: int = 16) -> RadialGrid:
    """Graded grid resolving the bubble core scale eps on [0, r_max]."""
    core = min(6.0 * eps, r_max)
    edges = list(np.linspace(0.0, core, max(2, int(np.ceil(core / (eps / 2.0))) + 1)))
    width = eps
    while edges[-1] < r_max:
        edges.append(min(edges[-1] + width, r_max))
        width *= 1.25
    x, w = leggauss(nodes_per_panel)
    e = np.asarray(edges)
    half = 0.5 * np.diff(e)
    mid = 0.5 * (e[:-1] + e[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return RadialGrid(nodes, weights, GridKind.EUCLIDEAN, domain_end=float(r_max))


def sampled_bubble(p: Params, bp: BubbleParams) -> RadialFunction:
    grid = bubble_grid(bp.eps, 2.0 * bp.delta)
    return RadialFunction.from_profile(
        truncated_bubble_profile(p, bp), grid, 2.0 * bp.delta, Space.EUCLIDEAN
    )


def crit_mass(p: Params, bp: BubbleParams) -> float:
    """int |eta U_eps|^{2*_s} dx by radial quadrature; -> M_inf as eps -> 0."""
    w = sampled_bubble(p, bp)
    r = w.grid.nodes
    return sphere_area(p.n) * w.grid.integrate(np.abs(w.values) ** p.two_star * r ** (p.n - 1))


def bubble_mass_limit(n: int) -> float:
    """M_inf = int (1+|y|^2)^-n dy, the eps -> 0 critical mass."""
    grid = geometric_grid(1e5, GridKind.EUCLIDEAN, first_width=0.05)
    r = grid.nodes
    return sphere_area(n) * grid.integrate((1.0 + r * r) ** (-n) * r ** (n - 1))


def hyperbolic_l2_mass(p: Params, bp: BubbleParams) -> float:
    """int |w_eps|^2 phi^{2s} dx over the ball = int |u_eps|^2 dV for the lift.

    phi = 2/(1-|x|^2); the exponent +2s is what the lift identity requires
    under this convention.
    """
    w = sampled_bubble(p, bp)
    r = w.grid.nodes
    weight = (2.0 / (1.0 - r * r)) ** (2.0 * p.s)
    return sphere_area(p.n) * w.grid.integrate(w.values ** 2 * weight * r ** (p.n - 1))


# ---------------------------------------------------------------------------
# Radial Fourier (Hankel) analysis
# ---------------------------------------------------------------------------

def _scaled_bessel_matrix(n, r_nodes, rho_nodes):
    from .special import bessel_j_scaled

    nu = (n - 2) / 2.0
    x = np.multiply.outer(r_nodes, rho_nodes)
    return bessel_j_scaled(nu, x.ravel()).reshape(x.shape)


def radial_fourier(w: RadialFunction, n: int, rho_grid: RadialGrid,
                   tail_tol: float = 1e-6) -> SpectralProfile:
    """Unitary radial Fourier transform
    w_hat(rho) = rho^{-(n-2)/2} int_0^inf w(r) J_{(n-2)/2}(r rho) r^{n/2} dr.

    Equals int w(r) [J_nu(r rho)/(r rho)^nu] r^{n-1} dr, which is how it is
    computed (no 0/0 at small rho). The grid is refined against the Bessel
    oscillation at rho_max when the profile formula is known.
    """
    if w.space is not Space.EUCLIDEAN:
        raise SupportError("radial_fourier expects a Euclidean profile")
    w.require_compact_support()
    if w.support_radius > w.grid.r_max * (1.0 + 1e-12):
        raise SupportError("grid does not cover the support of w")
    rho_max = rho_grid.r_max
    grid, values = w.grid, w.values
    max_panel = PHASE_PER_PANEL / max(rho_max, 1.0)
    if w.profile is not None and _max_panel_width(grid) > max_panel:
        grid = _refined_copy(grid, max_panel)
        values = np.where(grid.nodes <= w.support_radius, w.profile(grid.nodes), 0.0)
    mat = _scaled_bessel_matrix(n, grid.nodes, rho_grid.nodes)
    density = values * grid.nodes ** (n - 1) * grid.weights
    what = mat.T @ density
    tail = _spectral_tail_fraction(rho_grid, what ** 2 * rho_grid.nodes ** (n - 1))
    if tail > tail_tol:
        raise TailError(f"radial_fourier high-rho tail fraction {tail:.3e} > {tail_tol:.1e}")
    return SpectralProfile(rho_grid, what)


def _max_panel_width(grid: RadialGrid):
    # panel edges are not stored; node gaps across panel boundaries bound widths
    return float(np.max(np.diff(grid.nodes))) * 16.0 / 2.0


def _refined_copy(grid: RadialGrid, max_width):
    return _grid_from_edges(_edges_for(grid.r_max, 0.02, max_width))


def _edges_for(r_max, first_width, max_width, growth=1.2):
    edges = [0.0]
    width = min(first_width, max_width)
    while edges[-1] < r_max:
        edges.append(min(edges[-1] + width, r_max))
        width = min(width * growth, max_width)
    return np.asarray(edges)


def _grid_from_edges(edges, kind=GridKind.EUCLIDEAN):
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _GL16_X[None, :]).ravel()
    weights = (half[:, None] * _GL16_W[None, :]).ravel()
    return RadialGrid(nodes, weights, kind, domain_end=float(edges[-1]))


def _spectral_tail_fraction(grid, magnitude):
    total = float(np.dot(grid.weights, np.abs(magnitude)))
    if total <= 0.0:
        return 0.0
    tail = grid.nodes >= 0.9 * grid.r_max
    return float(np.dot(grid.weights[tail], np.abs(magnitude[tail]))) / total


def _hankel_banded(profile, support, n, rho_bands):
    """w_hat on a list of (rho_nodes,) bands; r truncated per band under a
    smooth sub-window so that r*rho stays within the oscillation budget."""
    out = []
    for rho_nodes in rho_bands:
        rho_lo = float(rho_nodes[0])
        rho_hi = float(rho_nodes[-1])
        r_cut = min(support, max(200.0, OSC_BUDGET / max(rho_lo, 1e-300)))
        edges = _edges_for(r_cut, 0.02, max(PHASE_PER_PANEL / rho_hi, 1e-4))
        grid = _grid_from_edges(edges)
        vals = np.where(grid.nodes <= support, profile(grid.nodes), 0.0)
        if r_cut < support:
            vals = vals * smooth_window(grid.nodes, 0.5 * r_cut, r_cut)
        mat = _scaled_bessel_matrix(n, grid.nodes, rho_nodes)
        out.append(mat.T @ (vals * grid.nodes ** (n - 1) * grid.weights))
    return out


def _octave_bands(rho_min, rho_max, panels_per_octave=3):
    """GL node/weight bands covering [rho_min, rho_max] in octaves."""
    bands = []
    lo = rho_min
    while lo < rho_max:
        hi = min(2.0 * lo, rho_max)
        edges = np.linspace(lo, hi, panels_per_octave + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * _GL16_X[None, :]).ravel()
        weights = (half[:, None] * _GL16_W[None, :]).ravel()
        bands.append((nodes, weights))
        lo = hi
    return bands


def _banded_energy(profile, support, p: Params, rho_min, rho_max, pair=None):
    """omega int rho^{2s+n-1} w1_hat w2_hat d rho over octave bands, extending
    rho_max until the running tail undershoots 1e-9 of the accumulated total."""
    n, s = p.n, p.s
    total = 0.0
    contributions = []
    lo = rho_min
    cap = max(rho_max, 1.0) * 4096.0
    while True:
        hi = min(2.0 * lo, cap)
        bands = _octave_bands(lo, hi)
        nodes = [b[0] for b in bands]
        w1 = _hankel_banded(profile, support, n, nodes)
        w2 = w1 if pair is None else _hankel_banded(pair[0], pair[1], n, nodes)
        for (rho, wts), a, b in zip(bands, w1, w2):
            contributions.append(float(np.dot(wts, rho ** (2.0 * s + n - 1.0) * a * b)))
        total = math.fsum(contributions)
        band_abs = abs(contributions[-1]) + abs(contributions[-2]) if len(contributions) > 1 else abs(contributions[-1])
        if hi >= rho_max and band_abs <= 1e-9 * max(abs(total), 1e-300):
            break
        if hi >= cap:
            raise TailError("fractional energy tail did not close before the frequency cap")
        lo = hi
    return sphere_area(n) * total


def fractional_energy(w: RadialFunction, p: Params, rho_min: float = None,
                      rho_max_hint: float = None) -> float:
    """The 2s-weighted Plancherel integral omega int rho^{2s} |w_hat|^2 rho^{n-1} d rho.

    For s = 1 this is the Dirichlet integral. The frequency range extends
    adaptively until the spectral tail closes.
    """
    if w.space is not Space.EUCLIDEAN:
        raise SupportError("fractional_energy expects a Euclidean profile")
    w.require_compact_support()
    if w.is_zero():
        return 0.0
    profile = w.profile
    if profile is None:
        samples = (w.grid, w.values)

        def profile(r, _g=samples):
            return np.interp(r, _g[0].nodes, _g[1], left=_g[1][0], right=0.0)

    support = min(w.support_radius, w.grid.r_max)
    if rho_min is None:
        rho_min = min(1e-4, 0.05 / support)
    if rho_max_hint is None:
        rho_max_hint = 64.0
    return _banded_energy(profile, support, p, rho_min, rho_max_hint)


def fractional_cross_energy(w1: RadialFunction, w2: RadialFunction, p: Params) -> float:
    """omega int rho^{2s+n-1} w1_hat(rho) w2_hat(rho) d rho (shared bands)."""
    for w in (w1, w2):
        if w.space is not Space.EUCLIDEAN:
            raise SupportError("fractional_cross_energy expects Euclidean profiles")
        w.require_compact_support()
        if w.profile is None:
            raise SupportError("cross energies need profile formulas")
    support = max(min(w1.support_radius, w1.grid.r_max), min(w2.support_radius, w2.grid.r_max))
    rho_min = min(1e-4, 0.05 / support)
    return _banded_energy(
        w1.profile, min(w1.support_radius, w1.grid.r_max), p, rho_min, 64.0,
        pair=(w2.profile, min(w2.support_radius, w2.grid.r_max)),
    )


_BASELINE_CACHE = {}


def bubble_energy_baseline(p: Params) -> dict:
    """E(U) for the untruncated bubble, by smooth windowing at two radii and
    Richardson extrapolation in the window radius (bias ~ R^-(n-2s)).

    Returns {"energy", "tail_bound", "raw": {R: E_R}}.
    """
    key = (p.n, p.s)
    hit = _BASELINE_CACHE.get(key)
    if hit is not None:
        return hit
    q = (p.n - 2.0 * p.s) / 2.0
    raw = {}
    for R in BASELINE_RADII:
        def prof(r, _R=R):
            r = np.asarray(r, dtype=float)
            return (1.0 + r * r) ** (-q) * smooth_window(r, 0.5 * _R, _R)

        raw[R] = _banded_energy(prof, R, p, min(1e-4, 0.05 / R), 64.0)
    r1, r2 = BASELINE_RADII
    a = p.n - 2.0 * p.s
    ratio = (r2 / r1) ** a
    energy = (ratio * raw[r2] - raw[r1]) / (ratio - 1.0)
    out = {"energy": energy, "tail_bound": abs(raw[r2] - raw[r1]), "raw": raw}
    _BASELINE_CACHE[key] = out
    return out


def fit_loglog_slope(x, y, drop_largest_outlier: bool = True) -> float:
    """OLS slope of log y against log x; the largest-x point is dropped when
    its residual exceeds twice the residual spread (leading-constant
    contamination at the coarse end of an eps ladder)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or np.any(y <= 0.0):
        raise DegenerateData("slope fit needs >= 3 points with positive values")
    lx, ly = np.log(x), np.log(y)
    coeffs = np.polyfit(lx, ly, 1)
    if drop_largest_outlier and x.size >= 4:
        resid = ly - np.polyval(coeffs, lx)
        sigma = float(np.std(resid))
        largest = int(np.argmax(x))
        if sigma > 0.0 and abs(resid[largest]) > 2.0 * sigma:
            keep = np.arange(x.size) != largest
            coeffs = np.polyfit(lx[keep], ly[keep], 1)
    return float(coeffs[0])


def energy_asymptotics_experiment(p: Params, delta: float, eps_ladder) -> float:
    """Fitted slope of log|E(eta U_eps) - E(U)| against log eps (expect n-2s)."""
    eps_ladder = np.asarray(eps_ladder, dtype=float)
    if eps_ladder.size < 4 or np.any(np.diff(eps_ladder) >= 0.0):
        raise ParameterError("eps_ladder must be decreasing with >= 4 entries")
    base = bubble_energy_baseline(p)["energy"]
    diffs = []
    for eps in eps_ladder:
        w = sampled_bubble(p, BubbleParams(float(eps), delta))
        diffs.append(abs(fractional_energy(w, p) - base))
    diffs = np.asarray(diffs)
    if np.any(diffs <= 0.0):
        raise DegenerateData("energy differences underflowed")
    return fit_loglog_slope(eps_ladder, diffs)


def _bubble_radial_derivative(p: Params, order: int):
    q = (p.n - 2.0 * p.s) / 2.0
    if order == 0:
        return lambda r: (1.0 + r * r) ** (-q)
    if order == 1:
        return lambda r: -2.0 * q * r * (1.0 + r * r) ** (-q - 1.0)
    if order == 2:
        return lambda r: (-2.0 * q * (1.0 + r * r) ** (-q - 1.0)
                          + 4.0 * q * (q + 1.0) * r * r * (1.0 + r * r) ** (-q - 2.0))
    raise ParameterError("derivative order must be 0, 1 or 2")


def derivative_bound_check(p: Params, delta: float, eps_ladder, order: int):
    """sup_{r >= delta} |d^order U_eps| / eps^{(n-2s)/2} for each eps.

    The returned ratios must stay bounded uniformly in eps (the constant in
    the derivative estimate is eps-free).
    """
    if order not in (0, 1, 2):
        raise ParameterError("order must be <= 2")
    deriv = _bubble_radial_derivative(p, order)
    q = (p.n - 2.0 * p.s) / 2.0
    ratios = []
    for eps in np.asarray(eps_ladder, dtype=float):
        grid = np.geomspace(delta, 50.0 * delta, 4000)
        sup = float(np.max(np.abs(deriv(grid / eps)))) * eps ** (-q - order)
        ratios.append(sup / eps ** q)
    return np.asarray(ratios)
