"""Batch driver: every experiment as a subcommand emitting diff-able CSV/JSON
plus a run manifest.

Exit codes: 0 success, 2 input validation, 3 I/O failure, 4 acceptance-fit
failure. Re-running a subcommand with identical flags produces byte-identical
data files; the timestamp lives only in the manifest sidecar.
"""

import argparse
import concurrent.futures
import datetime
import json
import math
import os
import subprocess
import sys

import numpy as np

from .bubbles import BubbleParams, crit_mass, bubble_mass_limit, fit_loglog_slope, \
    fractional_energy, hyperbolic_l2_mass, sampled_bubble, bubble_energy_baseline
from .errors import GjmsLabError, ParameterError
from .multipliers import b_constant, gap_constant, multiplier, spectral_bottom
from .params import MultiplierKind, Params
from .quotients import BubbleFamily, SplineFamily, gap_scan, multibump_blowdown, \
    sharp_constant_estimate, sobolev_quotient, spline_knots, spline_trial
from .spherical import decay_rate_fit, lp_mass, regularized_kernel, regularized_kernel_scan
from .special import DEFAULT_CONFIG

_KINDS = {
    "gjms": MultiplierKind.GJMS,
    "intertwined": MultiplierKind.INTERTWINED,
    "remainder": MultiplierKind.REMAINDER,
}


def worker_count() -> int:
    """Worker-pool cap from GJMS_LAB_THREADS (positive integer)."""
    raw = os.environ.get("GJMS_LAB_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"GJMS_LAB_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ParameterError(f"GJMS_LAB_THREADS must be >= 1, got {value}")
    return min(value, os.cpu_count() or 1)


def ordered_map(fn, items):
    """Map preserving order, on the worker pool when one is configured."""
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _git_describe():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _tolerances():
    return {
        "series_tol": DEFAULT_CONFIG.series_tol,
        "series_cap": DEFAULT_CONFIG.series_cap,
        "pole_tol": DEFAULT_CONFIG.pole_tol,
        "quotient_tol": 1e-5,
        "tail_tol": 1e-4,
    }


def write_manifest(out_path, command, params):
    manifest = {
        "command": command,
        "params": {k: (v if not isinstance(v, (list, tuple)) else list(v))
                   for k, v in sorted(params.items())},
        "git_describe": _git_describe(),
        "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tolerances": _tolerances(),
    }
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(out_path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    with open(out_path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_floats(spec):
    try:
        values = [float(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError:
        raise ParameterError(f"could not parse float list {spec!r}")
    if not values:
        raise ParameterError("empty value list")
    return values


def _parse_lambda_spec(spec):
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ParameterError("lambda spec must be start:stop:count or a comma list")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ParameterError(f"bad lambda spec {spec!r}")
        if count < 1:
            raise ParameterError("lambda count must be >= 1")
        return list(np.linspace(start, stop, count))
    return _parse_floats(spec)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_constants(args) -> int:
    p = Params(args.n, args.s)
    payload = {
        "n": p.n,
        "s": p.s,
        "rho": p.rho,
        "two_star": p.two_star,
        "lambda0": spectral_bottom(MultiplierKind.GJMS, p),
        "lambda0_tilde": spectral_bottom(MultiplierKind.INTERTWINED, p),
        "b": b_constant(p.s),
        "gap": gap_constant(p.s),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_multiplier(args) -> int:
    p = Params(args.n, args.s)
    kind = _KINDS[args.kind]
    if args.count < 2 or args.beta_max <= 0:
        raise ParameterError("need count >= 2 and beta-max > 0")
    betas = np.linspace(0.0, args.beta_max, args.count)
    values = multiplier(kind, p, betas)
    write_csv(args.out, ["beta", "value"],
              [(float(b), float(v)) for b, v in zip(betas, values)])
    write_manifest(args.out, "multiplier", vars_of(args))
    return 0


_L2_REGIMES = ("power", "log", "low")


def _l2_regime(p: Params):
    if p.n > 4 * p.s:
        return "power", 2.0 * p.s
    if p.n == 4 * p.s:
        return "log", 2.0 * p.s
    return "low", p.n - 2.0 * p.s


def cmd_bubble_asymptotics(args) -> int:
    p = Params(args.n, args.s)
    ladder = _parse_floats(args.eps_ladder)
    if any(e <= 0 or e >= 1 for e in ladder) or len(ladder) < 2:
        raise ParameterError("eps ladder must have >= 2 entries in (0, 1)")
    delta = args.delta
    rows = ordered_map(
        lambda eps: (
            eps,
            crit_mass(p, BubbleParams(eps, delta)),
            hyperbolic_l2_mass(p, BubbleParams(eps, delta)),
            fractional_energy(sampled_bubble(p, BubbleParams(eps, delta)), p),
        ),
        ladder,
    )
    write_csv(args.out, ["eps", "crit_mass", "l2_mass", "energy"], rows)

    eps = np.array([r[0] for r in rows])
    crit = np.array([r[1] for r in rows])
    l2 = np.array([r[2] for r in rows])
    energy = np.array([r[3] for r in rows])
    m_inf = bubble_mass_limit(p.n)
    e_base = bubble_energy_baseline(p)["energy"]

    crit_slope = fit_loglog_slope(eps, np.abs(m_inf - crit))
    regime, l2_target = _l2_regime(p)
    summary = {
        "crit": {"slope": crit_slope, "target": float(p.n), "tol": 0.3,
                 "passed": bool(abs(crit_slope - p.n) <= 0.3)},
        "energy": {}, "l2": {},
    }
    if regime == "log":
        ratios = l2 / (eps ** (2.0 * p.s) * np.abs(np.log(eps)))
        drift = float(abs(ratios[-1] / ratios[-2] - 1.0))
        summary["l2"] = {"regime": "log", "target": l2_target,
                         "ratio_drift": drift, "tol": 0.10,
                         "passed": bool(drift <= 0.10 and np.all(ratios > 0))}
    else:
        l2_slope = fit_loglog_slope(eps, l2)
        tol = 0.1 if regime == "power" else 0.05
        summary["l2"] = {"regime": regime, "slope": l2_slope, "target": l2_target,
                         "tol": tol, "passed": bool(abs(l2_slope - l2_target) <= tol)}
    diffs = np.abs(energy - e_base)
    energy_slope = fit_loglog_slope(eps, diffs)
    e_target = p.n - 2.0 * p.s
    summary["energy"] = {"slope": energy_slope, "target": e_target, "tol_rel": 0.15,
                         "passed": bool(abs(energy_slope - e_target) <= 0.15 * e_target)}
    write_json(args.out + ".summary.json", summary)
    write_manifest(args.out, "bubble-asymptotics", vars_of(args))
    if not all(block["passed"] for block in summary.values()):
        return 4
    return 0


def _family_from_args(args):
    if args.family == "bubble":
        return BubbleFamily()
    return SplineFamily(knots=args.spline_knots, radius=args.spline_radius,
                        grading=args.spline_grading)


def cmd_gap_scan(args) -> int:
    p = Params(args.n, args.s)
    kind = _KINDS[args.kind]
    if kind is MultiplierKind.REMAINDER:
        raise ParameterError("gap-scan works with gjms or intertwined")
    lambdas = _parse_lambda_spec(args.lambda_spec)
    family = _family_from_args(args)
    s_est = sharp_constant_estimate(p)
    reports = gap_scan(kind, p, lambdas, family, eval_cap=args.budget, b_max=args.b_max)
    rows = [(float(lam), rep.quotient, rep.quotient / s_est - 1.0, rep.trial_descriptor)
            for lam, rep in zip(lambdas, reports)]
    write_csv(args.out, ["lambda", "quotient", "margin_vs_Sest", "trial_descriptor"], rows)
    write_manifest(args.out, "gap-scan", vars_of(args))
    return 0


def cmd_kernel_decay(args) -> int:
    p = Params(args.n, args.s)
    kind = _KINDS[args.kind]
    radii = _parse_floats(args.r_spec)
    if any(r < 0.5 for r in radii):
        raise ParameterError("kernel radii must satisfy r >= 0.5")
    if not args.eps_reg > 0:
        raise ParameterError("eps-reg must be > 0")
    values = ordered_map(lambda r: regularized_kernel(kind, p, r, args.eps_reg), radii)
    rows = [(float(r), float(v), float(np.log(abs(v)))) for r, v in zip(radii, values)]
    write_csv(args.out, ["r", "k_eps", "log_abs_k"], rows)
    fit_radii = [r for r in radii if 2.0 <= r <= 8.0]
    summary = {"target_slope": -p.rho, "eps_reg": args.eps_reg}
    if len(fit_radii) >= 4:
        summary["slope"] = decay_rate_fit(kind, p, fit_radii, args.eps_reg)
        summary["slope_half_eps"] = decay_rate_fit(kind, p, fit_radii, args.eps_reg / 2.0)
    scan = regularized_kernel_scan(kind, p, radii[-1])
    summary["kernel_scan_at_rmax"] = {repr(k): v for k, v in scan["values"].items()}
    summary["kernel_extrapolated_at_rmax"] = scan["extrapolated"]
    write_json(args.out + ".summary.json", summary)
    write_manifest(args.out, "kernel-decay", vars_of(args))
    return 0


def _wide_negative_trial(p: Params, lam: float):
    """A wide spline arch with negative numerator at lam > the spectral bottom."""
    bottom = spectral_bottom(MultiplierKind.INTERTWINED, p)
    margin = (lam - bottom) / bottom
    h = 1e-3
    c2 = (math.log(multiplier(MultiplierKind.INTERTWINED, p, h)) - math.log(bottom)) / h ** 2
    arch = min(38.0, 1.35 * math.pi * math.sqrt(max(c2, 0.5) / margin))
    family = SplineFamily(knots=51, radius=40.0, grading=0.0)
    kx = spline_knots(family)[:-1]
    with np.errstate(all="ignore"):
        theta = np.where(kx <= arch,
                         np.sin(np.pi * kx / arch) / np.sinh(np.maximum(kx, 1e-9)), 0.0)
    theta[0] = math.pi / arch
    u = spline_trial(family, theta, p)
    rep = sobolev_quotient(MultiplierKind.INTERTWINED, p, lam, u, b_max=8.0)
    return rep, u


def cmd_blowdown(args) -> int:
    p = Params(args.n, args.s)
    bottom = spectral_bottom(MultiplierKind.INTERTWINED, p)
    if not args.lam > bottom:
        print(
            "error: the quadratic form of the intertwined operator is nonnegative "
            f"for every trial if and only if lambda <= its spectral bottom ({bottom!r}); "
            "blow-down requires lambda above the bottom",
            file=sys.stderr,
        )
        return 2
    n_values = [int(v) for v in _parse_floats(args.n_spec)]
    if any(v < 1 for v in n_values):
        raise ParameterError("N values must be positive integers")
    rep, u = _wide_negative_trial(p, args.lam)
    numerator = rep.energy - args.lam * rep.l2_mass
    if numerator >= 0.0:
        print("error: calibration trial failed to reach a negative numerator",
              file=sys.stderr)
        return 4
    q = -numerator
    fit_radii = [2.0, 3.0, 4.0, 5.0]
    slope = decay_rate_fit(MultiplierKind.INTERTWINED, p, fit_radii, 0.01)
    alpha = min(0.8 * p.rho, 0.9 * abs(slope))
    l1_norm = lp_mass(u, p.n, 1.0)
    ks = [abs(regularized_kernel(MultiplierKind.INTERTWINED, p, r, 0.01)) for r in fit_radii]
    C = max(k * math.exp(alpha * r) for k, r in zip(ks, fit_radii)) * l1_norm ** 2
    R0 = max(1.0, math.log(8.0 * C / q) / alpha)
    rows = multibump_blowdown(p, args.lam, q, C, alpha, R0, n_values,
                              crit_norm_phi=rep.crit_norm)
    write_csv(args.out, ["N", "R_N", "bound", "scaled_bound"],
              [(r["N"], r["R_N"], r["bound"], r["scaled_bound"]) for r in rows])
    scaled = np.array([-r["scaled_bound"] for r in rows])
    ns = np.array([r["N"] for r in rows], dtype=float)
    summary = {"target_slope": 2.0 * p.s / p.n,
               "q": q, "C": C, "alpha": alpha, "R0": R0}
    if len(rows) >= 2 and np.all(scaled > 0):
        summary["slope"] = float(np.polyfit(np.log(ns), np.log(scaled), 1)[0])
    write_json(args.out + ".summary.json", summary)
    write_manifest(args.out, "blowdown", vars_of(args))
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def vars_of(args):
    skip = {"func", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _config_argv(argv):
    """Expand --config key=value files into flags; explicit flags win."""
    argv = list(argv)
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ParameterError("--config needs a path")
    path = argv[idx + 1]
    extra = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParameterError(f"bad config line {line!r}")
            key, value = line.split("=", 1)
            flag = "--" + key.strip().replace("_", "-")
            if flag not in argv:
                extra.extend([flag, value.strip()])
    return argv + extra


def build_parser():
    parser = argparse.ArgumentParser(prog="gjms-lab",
                                     description="spectral/variational experiments driver")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(sp):
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--s", type=float, required=True)
        sp.add_argument("--config", type=str, default=None)

    sp = sub.add_parser("constants", help="closed-form spectral constants as JSON")
    add_common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("multiplier", help="spectral symbol samples as CSV")
    add_common(sp)
    sp.add_argument("--kind", choices=sorted(_KINDS), required=True)
    sp.add_argument("--beta-max", type=float, required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--out", type=str, required=True)
    sp.set_defaults(func=cmd_multiplier)

    sp = sub.add_parser("bubble-asymptotics", help="cut-off bubble mass/energy ladders")
    add_common(sp)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--eps-ladder", type=str, required=True)
    sp.add_argument("--out", type=str, required=True)
    sp.set_defaults(func=cmd_bubble_asymptotics)

    sp = sub.add_parser("gap-scan", help="minimized Poincare-Sobolev quotients over lambda")
    add_common(sp)
    sp.add_argument("--kind", choices=["gjms", "intertwined"], required=True)
    sp.add_argument("--lambda-spec", type=str, required=True)
    sp.add_argument("--family", choices=["bubble", "spline"], required=True)
    sp.add_argument("--budget", type=int, default=500)
    sp.add_argument("--b-max", type=float, default=60.0)
    sp.add_argument("--spline-knots", type=int, default=12)
    sp.add_argument("--spline-radius", type=float, default=8.0)
    sp.add_argument("--spline-grading", type=float, default=3.3)
    sp.add_argument("--out", type=str, required=True)
    sp.set_defaults(func=cmd_gap_scan)

    sp = sub.add_parser("kernel-decay", help="regularized radial kernel decay")
    add_common(sp)
    sp.add_argument("--kind", choices=sorted(_KINDS), required=True)
    sp.add_argument("--r-spec", type=str, required=True)
    sp.add_argument("--eps-reg", type=float, required=True)
    sp.add_argument("--out", type=str, required=True)
    sp.set_defaults(func=cmd_kernel_decay)

    sp = sub.add_parser("blowdown", help="explicit multi-bump blow-down bound table")
    add_common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--n-spec", type=str, required=True)
    sp.add_argument("--out", type=str, required=True)
    sp.set_defaults(func=cmd_blowdown)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _config_argv(argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except GjmsLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
