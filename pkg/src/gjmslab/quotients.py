"""Poincare-Sobolev quotients on hyperbolic space and their minimization over
bubble and spline trial families, the strict-gap scans, the explicit
multi-bump blow-down bound, and the internal sharp-constant estimate."""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .bubbles import (
    BubbleParams,
    bubble_energy_baseline,
    bubble_mass_limit,
    crit_mass,
    fractional_energy,
    hyperbolic_l2_mass,
    sampled_bubble,
    smooth_window,
)
from .errors import BudgetExceeded, ParameterError, TailError, ZeroTrial
from .geometry import ball_to_geodesic, conformal_lift
from .grids import GridKind, RadialFunction, Space, uniform_grid
from .params import MultiplierKind, Params
from .spherical import DEFAULT_B_MAX, l2_mass, lp_mass, quadratic_form

log = logging.getLogger(__name__)

_GRID_BUCKETS = (1.25, 2.0, 3.0, 5.0, 8.0, 12.0, 16.0, 40.0)


@dataclass(frozen=True)
class QuotientReport:
    """Energy, masses, and quotient of one trial at one lambda."""

    lam: float
    energy: float
    l2_mass: float
    crit_norm: float
    quotient: float
    trial_descriptor: str

    def at_lambda(self, lam: float) -> "QuotientReport":
        """Same trial at a different shift (the numerator is affine in lambda)."""
        q = (self.energy - lam * self.l2_mass) / self.crit_norm
        return replace(self, lam=lam, quotient=q)


def standard_hyperbolic_grid(r_max: float):
    """Bucketed geodesic grids so the spherical-function matrices get reused.

    Fine panels where bubble cores live, coarser ones for the wide trials.
    """
    for bucket in _GRID_BUCKETS:
        if r_max <= bucket:
            width = 0.025 if bucket <= 2.0 else (0.05 if bucket <= 16.0 else 0.125)
            return uniform_grid(bucket, GridKind.HYPERBOLIC_GEODESIC, panel_width=width)
    raise ParameterError(f"trial support {r_max} exceeds the largest grid bucket")


def _report(p, lam, energy, l2, crit_integral, descriptor):
    if crit_integral <= 0.0:
        raise ZeroTrial("trial function has vanishing critical norm")
    crit = crit_integral ** (2.0 / p.two_star)
    quotient = (energy - lam * l2) / crit
    return QuotientReport(lam, energy, l2, crit, quotient, descriptor)


def sobolev_quotient(kind: MultiplierKind, p: Params, lam: float,
                     u: RadialFunction, b_max: float = DEFAULT_B_MAX) -> QuotientReport:
    """Quotient of an arbitrary radial hyperbolic trial.

    The energy goes through the spectral quadratic form; for GJMS it is
    assembled as the intertwined energy plus the remainder-symbol form.
    """
    if kind not in (MultiplierKind.GJMS, MultiplierKind.INTERTWINED):
        raise ParameterError("sobolev_quotient expects GJMS or INTERTWINED")
    if u.is_zero():
        raise ZeroTrial("sobolev_quotient needs a nonzero trial")
    energy = quadratic_form(MultiplierKind.INTERTWINED, p, 0.0, u, b_max=b_max)
    if kind is MultiplierKind.GJMS:
        energy += quadratic_form(MultiplierKind.REMAINDER, p, 0.0, u, b_max=b_max)
    l2 = l2_mass(u, p.n)
    crit_integral = lp_mass(u, p.n, p.two_star)
    return _report(p, lam, energy, l2, crit_integral, f"radial[{kind.value}]")


def bubble_quotient(kind: MultiplierKind, p: Params, lam: float,
                    bp: BubbleParams, b_max: float = DEFAULT_B_MAX) -> QuotientReport:
    """Quotient of the lifted truncated bubble.

    The intertwined energy is taken as the Euclidean fractional energy of
    the truncated bubble (the exact conformal reduction); the GJMS case adds
    the remainder form of the lifted trial through the spherical transform.
    """
    if kind not in (MultiplierKind.GJMS, MultiplierKind.INTERTWINED):
        raise ParameterError("bubble_quotient expects GJMS or INTERTWINED")
    w = sampled_bubble(p, bp)
    energy = fractional_energy(w, p)
    if kind is MultiplierKind.GJMS:
        u = conformal_lift(w, p)
        grid = standard_hyperbolic_grid(float(ball_to_geodesic(2.0 * bp.delta)))
        u_std = RadialFunction.from_profile(u.profile, grid, u.support_radius,
                                            Space.HYPERBOLIC)
        energy += quadratic_form(MultiplierKind.REMAINDER, p, 0.0, u_std, b_max=b_max)
    l2 = hyperbolic_l2_mass(p, bp)
    crit_integral = crit_mass(p, bp)
    descriptor = f"bubble[eps={bp.eps:.6g},delta={bp.delta:.6g}]"
    return _report(p, lam, energy, l2, crit_integral, descriptor)


# ---------------------------------------------------------------------------
# Trial families and derivative-free minimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BubbleFamily:
    """Box of (eps, delta) bubble parameters searched by coordinate descent."""

    eps_lo: float = 0.02
    eps_hi: float = 0.3
    delta_lo: float = 0.05
    delta_hi: float = 0.245

    def __post_init__(self):
        if not (0.0 < self.eps_lo < self.eps_hi < 1.0):
            raise ParameterError("invalid eps box")
        if not (0.0 < self.delta_lo < self.delta_hi < 0.25):
            raise ParameterError("invalid delta box")


@dataclass(frozen=True)
class SplineFamily:
    """Cubic-spline radial profiles: values at knots on [0, radius].

    grading > 0 packs knots toward the origin (sinh spacing) so one family
    expresses both concentration cores and tails; grading = 0 gives uniform
    knots, the right choice for wide low-frequency trials on large supports
    (graded tails under-resolve there and the sinh^{n-1} weight amplifies
    any spline wiggle).
    """

    knots: int = 12
    radius: float = 8.0
    grading: float = 3.3

    def __post_init__(self):
        if self.knots < 4 or not self.radius > 0.0:
            raise ParameterError("spline family needs >= 4 knots and radius > 0")
        if self.grading < 0.0:
            raise ParameterError("grading must be >= 0")


def spline_knots(family: SplineFamily) -> np.ndarray:
    """Knot abscissas per the family's grading (0 = uniform)."""
    i = np.linspace(0.0, 1.0, family.knots)
    a = family.grading
    if a == 0.0:
        return family.radius * i
    return family.radius * np.sinh(a * i) / math.sinh(a)


def spline_trial(family: SplineFamily, theta, p: Params) -> RadialFunction:
    """Radial trial from knot values: natural-in-slope spline times a smooth
    window vanishing at the support radius (keeps the transform tail closed)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (family.knots - 1,):
        raise ParameterError(f"expected {family.knots - 1} free knot values")
    knots_x = spline_knots(family)
    values = np.concatenate([theta, [0.0]])
    spline = CubicSpline(knots_x, values, bc_type=((1, 0.0), (1, 0.0)))
    R = family.radius
    # trailing zero knots truncate the support: past-the-support spline
    # ringing (~1e-15) would otherwise be amplified by sinh^{n-1} weights
    nonzero = np.nonzero(theta)[0]
    if nonzero.size == 0:
        support = 0.0
    else:
        support = float(knots_x[min(int(nonzero[-1]) + 1, family.knots - 1)])

    def profile(r):
        r = np.asarray(r, dtype=float)
        inside = r <= support
        out = np.zeros_like(r)
        out[inside] = spline(r[inside]) * smooth_window(r[inside], 0.8 * R, R)
        return out

    grid = standard_hyperbolic_grid(R)
    return RadialFunction.from_profile(profile, grid, min(support, R), Space.HYPERBOLIC)


def _golden_section(f, lo, hi, *, steps):
    """Deterministic bounded golden-section minimization; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


class _Budget:
    def __init__(self, cap):
        self.cap = cap
        self.used = 0
        self.best = None

    def tick(self):
        self.used += 1
        if self.used > self.cap:
            raise BudgetExceeded(f"evaluation cap {self.cap} exhausted")

    def offer(self, report):
        if self.best is None or report.quotient < self.best.quotient:
            self.best = report


def _nelder_mead(f, x0, step, budget: _Budget, ftol):
    """Deterministic Nelder-Mead; returns (x_best, f_best, converged).

    Converges when either the simplex values collapse or the running best
    stalls (changes by <= ftol) over a 2n-iteration window.
    """
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    n = x0.size
    simplex = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += step[i]
        simplex.append(v)
    try:
        fvals = [f(v) for v in simplex]
    except BudgetExceeded:
        return x0, math.inf, False
    converged = False
    best_trace = []
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]
        best_trace.append(fvals[0])
        window = 2 * n
        if abs(fvals[-1] - fvals[0]) <= ftol * (1.0 + abs(fvals[0])):
            converged = True
            break
        if (len(best_trace) > window
                and best_trace[-window] - best_trace[-1] <= ftol * (1.0 + abs(best_trace[-1]))):
            converged = True
            break
        centroid = np.mean(simplex[:-1], axis=0)
        try:
            xr = centroid + alpha * (centroid - simplex[-1])
            fr = f(xr)
            if fr < fvals[0]:
                xe = centroid + gamma * (centroid - simplex[-1])
                fe = f(xe)
                if fe < fr:
                    simplex[-1], fvals[-1] = xe, fe
                else:
                    simplex[-1], fvals[-1] = xr, fr
            elif fr < fvals[-2]:
                simplex[-1], fvals[-1] = xr, fr
            else:
                xc = centroid + rho * (simplex[-1] - centroid)
                fc = f(xc)
                if fc < fvals[-1]:
                    simplex[-1], fvals[-1] = xc, fc
                else:
                    for i in range(1, n + 1):
                        simplex[i] = simplex[0] + sigma * (simplex[i] - simplex[0])
                        fvals[i] = f(simplex[i])
        except BudgetExceeded:
            break
    best = int(np.argmin(fvals))
    return simplex[best], fvals[best], converged


DEFAULT_EVAL_CAP = 500
QUOTIENT_TOL = 1e-5


def minimize_quotient(kind: MultiplierKind, p: Params, lam: float, family,
                      eval_cap: int = DEFAULT_EVAL_CAP,
                      b_max: float = DEFAULT_B_MAX,
                      on_budget: str = "raise") -> QuotientReport:
    """Best quotient report found over the trial family.

    BubbleFamily: coordinate descent in (log eps, delta) with golden-section
    line searches. SplineFamily: Nelder-Mead over knot values with the
    amplitude normalized away by quotient homogeneity. Deterministic; raises
    BudgetExceeded when the cap lands before the stopping tolerance (pass
    on_budget="return" to take the best report found instead).
    """
    if on_budget not in ("raise", "return"):
        raise ParameterError('on_budget must be "raise" or "return"')
    budget = _Budget(eval_cap)
    try:
        if isinstance(family, BubbleFamily):
            return _minimize_bubble(kind, p, lam, family, budget, b_max)
        if isinstance(family, SplineFamily):
            return _minimize_spline(kind, p, lam, family, budget, b_max)
    except BudgetExceeded:
        if on_budget == "raise" or budget.best is None:
            raise
        return budget.best
    raise ParameterError(f"unknown trial family {family!r}")


def _minimize_bubble(kind, p, lam, family, budget, b_max):
    cache = {}

    def evaluate(log_eps, delta):
        key = (round(log_eps, 12), round(delta, 12))
        if key not in cache:
            budget.tick()
            rep = bubble_quotient(kind, p, lam, BubbleParams(math.exp(log_eps), delta),
                                  b_max=b_max)
            log.debug("bubble eval #%d %s -> %.10g", budget.used, key, rep.quotient)
            budget.offer(rep)
            cache[key] = rep
        return cache[key]

    le_lo, le_hi = math.log(family.eps_lo), math.log(family.eps_hi)
    le = 0.5 * (le_lo + le_hi)
    de = 0.5 * (family.delta_lo + family.delta_hi)
    best = evaluate(le, de)
    converged = False
    try:
        for _ in range(4):
            previous = best.quotient
            le, _ = _golden_section(lambda x: evaluate(x, de).quotient,
                                    le_lo, le_hi, steps=18)
            de, _ = _golden_section(lambda x: evaluate(le, x).quotient,
                                    family.delta_lo, family.delta_hi, steps=14)
            best = min(cache.values(), key=lambda r: r.quotient)
            if abs(previous - best.quotient) <= QUOTIENT_TOL * (1.0 + abs(best.quotient)):
                converged = True
                break
    except BudgetExceeded:
        pass
    best = min(cache.values(), key=lambda r: r.quotient)
    if not converged and budget.used >= budget.cap:
        raise BudgetExceeded(
            f"bubble search used {budget.used} evaluations without converging"
        )
    return best


def _lifted_bubble_shape(p, eps, delta_e):
    """Geodesic profile of a lifted ball-truncated bubble (start candidate)."""
    q = (p.n - 2.0 * p.s) / 2.0

    def shape(r):
        t = np.tanh(np.asarray(r, dtype=float) / 2.0)
        phi = 2.0 / (1.0 - t * t)
        return (phi ** (p.s - p.n / 2.0)
                * smooth_window(t, delta_e, min(2.0 * delta_e, 0.999))
                * eps ** (-q) * (1.0 + (t / eps) ** 2) ** (-q))

    return shape


def _spline_start_candidates(family, p):
    """Deterministic starting shapes: a wide bump plus lifted-bubble profiles."""
    knots_x = spline_knots(family)
    cands = [np.exp(-((2.2 * knots_x / family.radius) ** 2))[:-1]]
    for eps, de in ((0.3, 0.35), (0.15, 0.45), (0.08, 0.45), (0.05, 0.45)):
        shape = _lifted_bubble_shape(p, eps, de)
        vals = shape(knots_x)
        peak = float(np.max(np.abs(vals)))
        if peak > 0.0:
            cands.append((vals / peak)[:-1])
    return cands


def _minimize_spline(kind, p, lam, family, budget, b_max):
    best_holder = {}

    def evaluate(theta):
        budget.tick()
        u = spline_trial(family, theta, p)
        if u.is_zero():
            return math.inf
        try:
            rep = sobolev_quotient(kind, p, lam, u, b_max=b_max)
        except TailError:
            # spectral content past b_max: not priceable at this resolution
            log.debug("spline eval #%d rejected by the tail guard", budget.used)
            return math.inf
        scale = math.sqrt(rep.crit_norm)  # crit_norm(c u) = c^2 crit_norm(u)
        rep = replace(rep, trial_descriptor=(
            f"spline[m={family.knots},R={family.radius:.6g},"
            f"theta={np.array2string(np.asarray(theta) / max(scale, 1e-300), precision=4, separator=',')}]"
        ))
        log.debug("spline eval #%d -> %.10g", budget.used, rep.quotient)
        budget.offer(rep)
        if "best" not in best_holder or rep.quotient < best_holder["best"].quotient:
            best_holder["best"] = rep
        return rep.quotient

    candidates = _spline_start_candidates(family, p)
    theta0 = None
    best_f = math.inf
    try:
        for cand in candidates:
            f = evaluate(cand)
            if f < best_f:
                theta0, best_f = cand, f
    except BudgetExceeded:
        pass
    if theta0 is None:
        theta0 = candidates[0]
    step = 0.1 * np.ones_like(theta0)
    _, _, converged = _nelder_mead(evaluate, theta0, step, budget, QUOTIENT_TOL)
    if "best" not in best_holder:
        raise BudgetExceeded("spline search could not finish a single evaluation")
    if not converged and budget.used >= budget.cap:
        raise BudgetExceeded(
            f"spline search used {budget.used} evaluations without converging"
        )
    return best_holder["best"]


def gap_scan(kind: MultiplierKind, p: Params, lambda_grid, family,
             eval_cap: int = DEFAULT_EVAL_CAP, b_max: float = DEFAULT_B_MAX):
    """One minimized report per lambda, with best-trial carryover.

    For a fixed trial the numerator is affine and decreasing in lambda, so
    re-pricing earlier winners is free; the returned minimized quotients are
    therefore non-increasing along increasing lambda.
    """
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if lambda_grid.size == 0:
        raise ParameterError("gap_scan needs a nonempty lambda grid")
    order = np.argsort(lambda_grid, kind="stable")
    reports = {}
    carried = []
    for idx in order:
        lam = float(lambda_grid[idx])
        rep = minimize_quotient(kind, p, lam, family, eval_cap=eval_cap, b_max=b_max)
        for earlier in carried:
            candidate = earlier.at_lambda(lam)
            if candidate.quotient < rep.quotient:
                rep = candidate
        carried.append(rep)
        reports[idx] = rep
    return [reports[i] for i in range(lambda_grid.size)]


def multibump_blowdown(p: Params, lam: float, q: float, C: float, alpha: float,
                       R0: float, N_values, crit_norm_phi: float = 1.0):
    """The explicit far-apart-copies bound table.

    For each N: R_N = (2/alpha) log N + R0, bound = -N q + 2 C N^2 e^{-alpha R_N},
    and the quotient bound scaled by N^{2/2*} crit_norm_phi, which must blow
    down like -N^{2s/n}.
    """
    if not q > 0.0:
        raise ParameterError("multibump_blowdown needs q > 0 (a measured negative numerator)")
    if not (C >= 0.0 and alpha > 0.0 and R0 > 0.0 and crit_norm_phi > 0.0):
        raise ParameterError("C >= 0, alpha > 0, R0 > 0, crit_norm > 0 required")
    rows = []
    for N in N_values:
        N = int(N)
        if N < 1:
            raise ParameterError("N values must be positive integers")
        R_N = (2.0 / alpha) * math.log(N) + R0
        bound = -N * q + 2.0 * C * N * N * math.exp(-alpha * R_N)
        scaled = bound / (N ** (2.0 / p.two_star) * crit_norm_phi)
        rows.append({"N": N, "R_N": R_N, "bound": bound, "scaled_bound": scaled})
    return rows


_SHARP_CACHE = {}


def sharp_constant_report(p: Params) -> dict:
    """Internal sharp-constant estimate with its ingredients and error bar."""
    key = (p.n, p.s)
    hit = _SHARP_CACHE.get(key)
    if hit is not None:
        return hit
    base = bubble_energy_baseline(p)
    crit_integral = bubble_mass_limit(p.n)
    s_est = base["energy"] / crit_integral ** (2.0 / p.two_star)
    out = {
        "s_est": s_est,
        "energy": base["energy"],
        "energy_tail_bound": base["tail_bound"],
        "crit_integral": crit_integral,
    }
    _SHARP_CACHE[key] = out
    return out


def sharp_constant_estimate(p: Params) -> float:
    """S_est: the bubble energy over its critical norm, the package's
    internal reference for every gap margin."""
    if not (2 <= p.n <= 10):
        raise ParameterError("sharp_constant_estimate supports n in [2, 10]")
    return sharp_constant_report(p)["s_est"]
