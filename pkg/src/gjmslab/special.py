"""Self-contained special functions: complex log-Gamma, Gauss 2F1, associated
Legendre functions of complex degree, and Bessel J on the half-integer lattice.

Everything downstream (spectral symbols, Plancherel densities, radial Fourier
transforms) is built on these four entry points, so their tolerances live in a
single configuration record, ``SpecialConfig``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergence, ParameterPole, PoleError, UnsupportedOrder


@dataclass(frozen=True)
class SpecialConfig:
    """Module-wide tolerances and iteration caps."""

    pole_tol: float = 1e-12          # distance to a Gamma pole that counts as "at" it
    series_tol: float = 1e-14        # 2F1 term-ratio stopping tolerance
    series_cap: int = 10_000         # 2F1 iteration cap before NonConvergence
    bessel_series_x_max: float = 12.0   # integer orders: ascending series below, Hankel above
    bessel_small_x: float = 0.5      # half-integer orders: series below, Miller on [small, 1)
    bessel_miller_extra: int = 26    # downward-recursion start offset above the target order


DEFAULT_CONFIG = SpecialConfig()

_LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# Lanczos coefficients, g = 7, 9 terms (~15 significant digits on Re z > 0).
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _nearest_nonpositive_int(re, im, tol):
    """Index of the Gamma pole within tol of re+i*im, or None."""
    if abs(im) > tol:
        return None
    k = round(re)
    if k <= 0 and abs(re - k) <= tol:
        return int(k)
    return None


def _lanczos_log_gamma(z):
    """Principal log Gamma for Re z >= 0.5 (complex ndarray in/out)."""
    w = z - 1.0
    acc = np.full(np.shape(w), _LANCZOS[0], dtype=complex)
    for i in range(1, len(_LANCZOS)):
        acc = acc + _LANCZOS[i] / (w + i)
    t = w + _LANCZOS_G + 0.5
    return _LOG_SQRT_TWO_PI + (w + 0.5) * np.log(t) - t + np.log(acc)


def _log_sin_pi(z):
    """log(sin(pi z)) without overflow for large |Im z| (ndarray in/out)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    big = np.abs(z.imag) > 20.0
    mod = ~big
    if np.any(mod):
        out[mod] = np.log(np.sin(np.pi * z[mod]))
    if np.any(big):
        # conjugate-reflect to Im > 0, where e^{2 i pi z} is tiny
        zb = z[big]
        flip = zb.imag < 0
        zb = np.where(flip, np.conj(zb), zb)
        val = (
            -1j * np.pi * zb
            + 1j * np.pi
            - (math.log(2.0) + 1j * np.pi / 2.0)
            + np.log1p(-np.exp(2j * np.pi * zb))
        )
        out[big] = np.where(flip, np.conj(val), val)
    return out


def _log_gamma_array(z):
    """Vectorized complex log Gamma; no pole checks (callers' duty)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_log_gamma(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        out[left] = math.log(math.pi) - _log_sin_pi(zl) - _lanczos_log_gamma(1.0 - zl)
    return out[0] if scalar else out


def log_gamma(z, config: SpecialConfig = DEFAULT_CONFIG) -> complex:
    """Principal-branch log Gamma(z) for complex z off the pole set.

    Raises PoleError when z is within config.pole_tol of 0, -1, -2, ...
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"log_gamma requires finite z, got {z}")
    if _nearest_nonpositive_int(z.real, z.imag, config.pole_tol) is not None:
        raise PoleError(f"Gamma pole at z = {z}")
    return complex(_log_gamma_array(z))


def log_abs_gamma_sq(a, b):
    """2 * Re log Gamma(a + i b), vectorized over b (and a).

    This is the log of |Gamma(a+ib)|^2, the workhorse for every spectral
    symbol; kept in log form so ratios of huge/tiny moduli stay finite.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = a + 1j * b
    return 2.0 * np.real(_log_gamma_array(z))


def abs_gamma_sq(a: float, b: float, config: SpecialConfig = DEFAULT_CONFIG) -> float:
    """|Gamma(a + i b)|^2 > 0."""
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"abs_gamma_sq requires finite (a, b), got ({a}, {b})")
    if _nearest_nonpositive_int(a, b, config.pole_tol) is not None:
        raise PoleError(f"Gamma pole at z = {a}+{b}j")
    return float(np.exp(log_abs_gamma_sq(a, b)))


def _hyp2f1_series(a, b, c, y, config: SpecialConfig = DEFAULT_CONFIG):
    """Raw Gauss series sum_k (a)_k (b)_k / ((c)_k k!) y^k for 0 <= y < 1.

    a, b may be complex ndarrays (broadcast together); c real scalar.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    shape = np.broadcast_shapes(a.shape, b.shape)
    term = np.ones(shape, dtype=complex)
    total = term.copy()
    for k in range(config.series_cap):
        term = term * ((a + k) * (b + k)) / ((c + k) * (k + 1.0)) * y
        total = total + term
        if np.all(np.abs(term) <= config.series_tol * (np.abs(total) + 1e-300)):
            return total
    raise NonConvergence(
        f"2F1 series did not converge in {config.series_cap} terms (y = {y})"
    )


def hyp2f1(a: float, b: float, c: float, x: float,
           config: SpecialConfig = DEFAULT_CONFIG) -> float:
    """Gauss 2F1(a, b; c; x) for real parameters and x <= 0.

    The argument is mapped into [0, 1) by the Pfaff transformation
    2F1(a,b;c;x) = (1-x)^(-a) 2F1(a, c-b; c; x/(x-1)) and the defining
    series is summed there.
    """
    for name, v in (("a", a), ("b", b), ("c", c), ("x", x)):
        if not math.isfinite(float(v)):
            raise DomainError(f"hyp2f1 requires finite {name}, got {v}")
    if _nearest_nonpositive_int(c, 0.0, config.pole_tol) is not None:
        raise ParameterPole(f"2F1 lower parameter c = {c} is a non-positive integer")
    if x > 0.0:
        raise DomainError(f"hyp2f1 is restricted to x <= 0, got x = {x}")
    if x == 0.0:
        return 1.0
    y = x / (x - 1.0)
    f = _hyp2f1_series(a, c - b, c, y, config)
    return float(np.real((1.0 - x) ** (-a) * f))


def legendre_p(nu, mu: float, z: float,
               config: SpecialConfig = DEFAULT_CONFIG) -> complex:
    """Associated Legendre function P_nu^mu(z) of the first kind, z > 1.

    P_nu^mu(z) = ((z+1)/(z-1))^(mu/2) / Gamma(1-mu)
                 * 2F1(-nu, nu+1; 1-mu; (1-z)/2),
    with the hypergeometric factor evaluated by the Pfaff-transformed
    series, which supports the complex degrees nu = -1/2 + i*beta used by
    the spherical functions.
    """
    nu = complex(nu)
    mu = float(mu)
    z = float(z)
    if not z > 1.0:
        raise DomainError(f"legendre_p requires z > 1, got z = {z}")
    c = 1.0 - mu
    if _nearest_nonpositive_int(c, 0.0, config.pole_tol) is not None:
        raise ParameterPole(f"legendre_p parameter 1 - mu = {c} is a non-positive integer")
    x = (1.0 - z) / 2.0
    y = x / (x - 1.0)  # = (z-1)/(z+1) in [0, 1)
    a = -nu
    f = _hyp2f1_series(a, c - nu - 1.0, c, y, config)
    pfaff = np.exp(nu * math.log((z + 1.0) / 2.0)) * f
    pref = math.exp(0.5 * mu * (math.log(z + 1.0) - math.log(z - 1.0)))
    inv_gamma = np.exp(-_log_gamma_array(complex(c)))
    return complex(pref * inv_gamma * pfaff)


# ----------------------------------------------------------------------------
# Bessel J on the half-integer lattice {k/2 : k >= 0}
# ----------------------------------------------------------------------------

def _validate_order(order, config):
    two = 2.0 * float(order)
    if order < 0 or abs(two - round(two)) > 1e-12:
        raise UnsupportedOrder(f"order {order} is not on the half-integer lattice >= 0")
    return round(two) / 2.0


def _series_scaled(nu, x, terms=24):
    """J_nu(x)/x^nu by the ascending series; stable for x < ~1."""
    x = np.asarray(x, dtype=float)
    pref = math.exp(-math.lgamma(nu + 1.0)) * 0.5 ** nu
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(terms):
        term = term * q / ((k + 1.0) * (nu + k + 1.0))
        total = total + term
    return pref * total


def _half_upward(m, x):
    """J_{m+1/2}(x) for x >= 1 by upward recursion from the closed forms."""
    pref = np.sqrt(2.0 / (np.pi * x))
    jm1 = pref * np.cos(x)   # J_{-1/2}
    j = pref * np.sin(x)     # J_{+1/2}
    nu = 0.5
    for _ in range(m):
        j, jm1 = (2.0 * nu / x) * j - jm1, j
        nu += 1.0
    return j


def _half_miller(m, x, extra):
    """J_{m+1/2}(x) for x in [0.5, 1) by downward (Miller) recursion."""
    top = m + extra
    fp = np.zeros_like(x)
    f = np.full_like(x, 1e-30)
    target = np.zeros_like(x)
    nu = top + 0.5
    for k in range(top, 0, -1):
        fp, f = f, (2.0 * nu / x) * f - fp
        nu -= 1.0
        if k - 1 == m:
            target = f.copy()
    # f now holds the unnormalized J_{1/2}
    scale = np.sqrt(2.0 / (np.pi * x)) * np.sin(x) / f
    return target * scale


def _int_series(nu, x, terms=60):
    return _series_scaled(nu, x, terms=terms) * x ** nu


def _int_hankel(nu, x):
    """Hankel asymptotic expansion for integer nu and x > ~12.

    Terms are added until the smallest one (truncating an asymptotic series
    at its minimum term leaves an error of that term's size, ~1e-13 at the
    series split).
    """
    mu = 4.0 * nu * nu
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    ak = np.ones_like(x)
    last = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 40):
        ak = ak * (mu - (2.0 * k - 1.0) ** 2) / k * inv8x
        grew = np.abs(ak) >= last
        active &= ~grew
        if not np.any(active):
            break
        sign = (-1.0) ** (k // 2)
        if k % 2 == 1:
            q = q + np.where(active, sign * ak, 0.0)
        else:
            p = p + np.where(active, sign * ak, 0.0)
        last = np.abs(ak)
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j(order: float, x, config: SpecialConfig = DEFAULT_CONFIG):
    """Bessel J_order(x) for half-integer orders >= 0 and x >= 0.

    Scalar or ndarray x. Half-odd orders go through the spherical-Bessel
    closed forms (upward recursion for x >= 1, Miller recursion on [0.5, 1),
    ascending series below); integer orders use the ascending series up to
    the configured split and the Hankel expansion above it.
    """
    nu = _validate_order(order, config)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).astype(float)
    if np.any(xa < 0.0) or not np.all(np.isfinite(xa)):
        raise DomainError("bessel_j requires finite x >= 0")
    out = np.empty_like(xa)
    half = (round(2 * nu) % 2) == 1
    if half:
        m = int(round(nu - 0.5))
        lo = xa < config.bessel_small_x
        mid = (~lo) & (xa < 1.0)
        hi = xa >= 1.0
        if np.any(lo):
            out[lo] = _series_scaled(nu, xa[lo]) * xa[lo] ** nu
        if np.any(mid):
            out[mid] = _half_miller(m, xa[mid], config.bessel_miller_extra)
        if np.any(hi):
            out[hi] = _half_upward(m, xa[hi])
    else:
        lo = xa <= config.bessel_series_x_max
        if np.any(lo):
            out[lo] = _int_series(nu, xa[lo])
        if np.any(~lo):
            out[~lo] = _int_hankel(nu, xa[~lo])
    return float(out[0]) if scalar else out


def bessel_j_scaled(order: float, x, config: SpecialConfig = DEFAULT_CONFIG):
    """J_order(x) / x^order, finite and stable down to x = 0.

    This is the kernel the radial Fourier transform actually needs: its
    x -> 0 limit is 2^-order / Gamma(order+1).
    """
    nu = _validate_order(order, config)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).astype(float)
    if np.any(xa < 0.0) or not np.all(np.isfinite(xa)):
        raise DomainError("bessel_j_scaled requires finite x >= 0")
    out = np.empty_like(xa)
    lo = xa < config.bessel_small_x
    if np.any(lo):
        out[lo] = _series_scaled(nu, xa[lo])
    if np.any(~lo):
        xs = xa[~lo]
        out[~lo] = bessel_j(nu, xs, config) / xs ** nu
    return float(out[0]) if scalar else out
