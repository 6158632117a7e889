"""Command-line entry point.

Exit codes
----------
0   success (``check``: integrable and invertible)
1   ``check``: integrable but not invertible
2   ``check``: not integrable; ``simulate``: integrability check failed
3   path or increments do not cover the required horizon
64  configuration or usage error
65  parameter outside the domain of an identity (e.g. gamma alpha >= 0)
70  numerical failure (quadrature or inconsistent verdicts)
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .invert import (DomainError, RecoveryResult, anticipating_recover, gamma_recover,
                     gamma_to_ou, k_alpha, k_alpha_quadrature, langevin_recover,
                     mu_mass_diagnostic, path_scale, recovery_error)
from .kernels import GammaKernel, OUKernel, is_invertible
from .orlicz import InconsistentVerdict, membership
from .quadrature import QuadratureError
from .simulate import (CoverageError, Grid, IncrementPath, SamplePath, read_csv,
                       read_increments_csv, simulate_ctma, simulate_increments,
                       write_csv)
from .verify import (THETA_GRID, cf_agreement, density_residual, dyadic_shifts,
                     fubini_condition, graded_shifts, mu_weight)

EXIT_OK, EXIT_PARTIAL, EXIT_NOT_INTEGRABLE, EXIT_COVERAGE = 0, 1, 2, 3
EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERIC = 64, 65, 70


class CliFailure(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _jsonable(v.item())
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _manifest(cfg: RunConfig, command: str, *, grid: Grid | None = None,
              warmup: float | None = None, scheme: dict | None = None, **extra) -> dict:
    return {
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "dt": None if grid is None else grid.dt,
        "n": None if grid is None else grid.n,
        "warmup": warmup,
        "scheme": scheme or {},
        "version": __version__,
        "config": cfg.data,
        **extra,
    }


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(msg: str) -> None:
    print(msg)


# -- shared pieces -----------------------------------------------------------------------


def _integrability(cfg: RunConfig, kernel, triplet) -> dict:
    sec = cfg.section("check")
    rep = membership(triplet, kernel, sec.get("p"), with_norm=bool(sec.get("with_norm")))
    return rep.to_dict()


def _simulate_path(cfg: RunConfig, kernel, triplet) -> tuple[IncrementPath, SamplePath, float]:
    """Increments covering the kernel support around the output grid, then the CTMA."""
    out = cfg.grid()
    warmup = cfg.warmup(kernel)
    k0, k1 = kernel.weight_range(out.dt, warmup)
    n_inc = out.n + (k1 - k0) - 1
    inc_grid = Grid(out.t0 - k1 * out.dt, out.dt, n_inc)
    inc = simulate_increments(triplet, inc_grid, cfg.seed)
    path = simulate_ctma(kernel, inc, warmup, method=cfg.section("simulate")["method"])
    return inc, path, warmup


# -- commands ------------------------------------------------------------------------------


def cmd_check(cfg: RunConfig) -> int:
    kernel, triplet = cfg.kernel(), cfg.triplet()
    integ = _integrability(cfg, kernel, triplet)
    inv = is_invertible(kernel)
    member = bool(integ["member_of_L_psi"])
    code = EXIT_NOT_INTEGRABLE if not member else (EXIT_OK if inv.invertible else EXIT_PARTIAL)
    out = _out_dir(cfg)
    _write_json(out / "check.json", {
        "integrability": integ,
        "invertibility": {"invertible": inv.invertible, "reason": inv.reason,
                          "min_modulus": inv.min_modulus, "argmin": inv.argmin,
                          "details": inv.details},
        "exit_code": code,
    })
    _write_json(out / "manifest.json", _manifest(cfg, "check"))
    _say(f"integrable: {member} ({integ.get('analytic_rule') or 'quadrature only'}); "
         f"invertible: {inv.invertible} ({inv.reason})")
    return code


def cmd_simulate(cfg: RunConfig, force: bool = False) -> int:
    kernel, triplet = cfg.kernel(), cfg.triplet()
    integ = _integrability(cfg, kernel, triplet)
    if not integ["member_of_L_psi"] and not force:
        raise CliFailure("kernel is not integrable for this triplet; use --force to simulate "
                         "the truncated sum anyway", EXIT_NOT_INTEGRABLE)
    inc, path, warmup = _simulate_path(cfg, kernel, triplet)
    out = _out_dir(cfg)
    write_csv(inc, out / "increments.csv")
    write_csv(path, out / "path.csv")
    _write_json(out / "manifest.json", _manifest(
        cfg, "simulate", grid=path.grid, warmup=warmup, scheme=inc.scheme,
        increments_grid={"t0": inc.grid.t0, "dt": inc.grid.dt, "n": inc.grid.n},
        weights={"kernel": kernel.spec(), "rule": "cell averages of the kernel",
                 "method": cfg.section("simulate")["method"]},
        forced=bool(force and not integ["member_of_L_psi"])))
    v = path.values
    _say(f"simulated {path.grid.n} points (dt={path.grid.dt:g}); "
         f"mean {np.mean(v):.6g}, variance {np.var(v):.6g}")
    return EXIT_OK


def _recover(method: str, sec: dict, x: SamplePath) -> RecoveryResult:
    if method == "langevin":
        return langevin_recover(x, float(sec["lambda"]))
    if method == "anticipating":
        return anticipating_recover(x)
    if method == "gamma":
        if "alpha" not in sec:
            raise ConfigError("invert.method = 'gamma' needs invert.alpha")
        return gamma_recover(x, float(sec["alpha"]), float(sec["horizon"]))
    raise ConfigError(f"unknown invert.method {method!r}; expected langevin, anticipating or gamma")


def cmd_invert(cfg: RunConfig) -> int:
    sec = cfg.section("invert")
    method = sec["method"]
    if method == "gamma" and "alpha" in sec:
        k_alpha(float(sec["alpha"]))  # domain check before any work
    truth = None
    if "path" in sec:
        x = read_csv(cfg.base_dir / sec["path"])
        if "truth" in sec:
            truth = read_increments_csv(cfg.base_dir / sec["truth"])
    else:
        truth, x, _ = _simulate_path(cfg, cfg.kernel(), cfg.triplet())
    res = _recover(method, sec, x)
    rec = res.recovered
    if "window" in sec:
        lo, hi = (float(v) for v in sec["window"])
        rec = rec.restrict(lo, hi)
        res = RecoveryResult(SamplePath(rec.grid, rec.values - rec.values[0]), res.method,
                             res.quadrature_records)
    out = _out_dir(cfg)
    write_csv(res.recovered, out / "recovered.csv")
    report = {"method": res.method, "quadrature_records": res.quadrature_records,
              "n": res.recovered.grid.n, "dt": res.recovered.grid.dt}
    if truth is not None:
        sup, rmse = recovery_error(truth, res)
        g = res.recovered.grid
        scale = path_scale(truth, g.t0, g.t0 + g.dt * (g.n - 1))
        report.update(sup_error=sup, rmse=rmse, truth_scale=scale,
                      rmse_over_scale=rmse / scale if scale > 0 else None)
        _say(f"{method}: sup error {sup:.4g}, rmse {rmse:.4g} (scale {scale:.4g})")
    else:
        _say(f"{method}: recovered {res.recovered.grid.n} points")
    _write_json(out / "invert.json", report)
    _write_json(out / "manifest.json", _manifest(cfg, "invert", grid=x.grid))
    return EXIT_OK


# -- verify ------------------------------------------------------------------------------


def _theta_grid(sec: dict) -> np.ndarray:
    if "theta" in sec:
        return np.asarray(sec["theta"], dtype=float)
    step, top = float(sec["theta_step"]), float(sec["theta_max"])
    if step == 0.25 and top == 5.0:
        return THETA_GRID
    return np.round(np.arange(-top, top + 0.5 * step, step), 12)


def _verify_cf(cfg: RunConfig, out: Path) -> int:
    sec = cfg.section("verify")
    kernel, triplet = cfg.kernel(), cfg.triplet()
    rep = cf_agreement(triplet, kernel, int(sec["n_paths"]), cfg.seed,
                       theta_grid=_theta_grid(sec), dt=float(sec["dt"]),
                       warmup=sec.get("warmup"))
    _write_json(out / "cf.json", rep.to_dict())
    rows = np.column_stack([rep.theta_grid, np.real(rep.empirical_cf), np.imag(rep.empirical_cf),
                            np.real(rep.theoretical_cf), np.imag(rep.theoretical_cf),
                            rep.mc_halfwidth])
    np.savetxt(out / "cf.csv", rows, delimiter=",", fmt="%.17g",
               header="theta,emp_re,emp_im,theory_re,theory_im,halfwidth", comments="")
    _say(f"cf: {rep.fraction_outside:.1%} of theta points outside the 95% band "
         f"(max excess {rep.max_excess:.3g}, n={rep.n_samples})")
    return EXIT_OK


def _verify_density(cfg: RunConfig, out: Path) -> int:
    sec = cfg.section("verify")
    kernel = cfg.kernel()
    target = cfg.kernel("target", sec["target"])
    counts = [int(c) for c in sec["shift_counts"]]
    if "shifts" in sec:
        shifts = [float(s) for s in sec["shifts"]]
    elif sec["shift_design"] == "graded":
        shifts = graded_shifts(max(counts))
    elif sec["shift_design"] == "dyadic":
        shifts = dyadic_shifts(max(counts))
    else:
        raise ConfigError("verify.shift_design must be 'graded' or 'dyadic'")
    counts = [c for c in counts if c <= len(shifts)]
    curve = density_residual(kernel, target, shifts, cfg.grid(), counts=counts)
    _write_json(out / "residual.json", curve.to_dict())
    np.savetxt(out / "residual.csv", np.column_stack([curve.shift_counts, curve.residual_norms]),
               delimiter=",", fmt="%.17g", header="shifts,residual", comments="")
    rel = curve.residual_norms[-1] / curve.target_norm if curve.target_norm else float("nan")
    _say(f"density: residual {curve.residual_norms[0]:.4g} -> {curve.residual_norms[-1]:.4g} "
         f"({rel:.2%} of the target norm) with {curve.shift_counts[-1]} shifts")
    return EXIT_OK


def _verify_fubini(cfg: RunConfig, out: Path) -> int:
    sec = cfg.section("verify")
    alpha = float(sec["alpha"])
    g = cfg.kernel() if "kernel" in cfg.data else GammaKernel(alpha)
    mu = cfg.kernel("mu", sec["mu"]) if "mu" in sec else mu_weight(alpha)
    rep = fubini_condition(g, mu, cfg.triplet(), tuple(sec["domain"]))
    diag = mu_mass_diagnostic(alpha, [10.0 ** -k for k in range(1, 9)], float(sec["horizon"]))
    _write_json(out / "fubini.json", {**rep.to_dict(), "mu_mass_diagnostic": diag})
    _say(f"fubini: holds={rep.holds}, mu mass {rep.mu_mass:.6g}; "
         f"mu mass diverges as the cutoff shrinks: {diag['diverges']}")
    return EXIT_OK


def _verify_gamma_identity(cfg: RunConfig, out: Path) -> int:
    sec = cfg.section("verify")
    alpha, horizon = float(sec["alpha"]), float(sec["horizon"])
    k = k_alpha(alpha)
    lo, hi = (float(v) for v in sec["window"])
    triplet = cfg.triplet()
    dt = float(cfg.data["grid"].get("dt", 1e-3))
    warmup = cfg.warmup() or horizon
    t0 = lo - horizon - warmup
    n = int(math.ceil((hi - t0) / dt - 1e-9)) + 1
    inc = simulate_increments(triplet, Grid(t0, dt, n), cfg.seed)
    x = simulate_ctma(GammaKernel(alpha), inc, warmup)
    z = simulate_ctma(OUKernel(1.0), inc, warmup)
    y = gamma_to_ou(x, alpha, horizon).restrict(lo, hi)
    z = z.restrict(lo, hi)
    m = min(y.grid.n, z.grid.n)
    if m < 2 or abs(y.grid.t0 - z.grid.t0) > 1e-9 * max(1.0, abs(lo)):
        raise CoverageError("window not covered by both paths", hi - t0)
    yv, zv = y.values[:m], z.values[:m]
    rel = math.sqrt(np.mean((yv - zv) ** 2) / np.mean(zv ** 2))
    write_csv(SamplePath(Grid(y.grid.t0, dt, m), yv), out / "gamma_to_ou.csv")
    write_csv(SamplePath(Grid(z.grid.t0, dt, m), zv), out / "ou.csv")
    _write_json(out / "gamma_identity.json", {
        "alpha": alpha, "k_alpha": k, "k_alpha_quadrature": k_alpha_quadrature(alpha),
        "horizon": horizon, "warmup": warmup, "window": [lo, hi], "dt": dt,
        "relative_rmse": rel, "scheme": inc.scheme})
    _say(f"gamma identity: k_alpha = {k:.12g}, relative rmse {rel:.4%}")
    return EXIT_OK


VERIFY = {"cf": _verify_cf, "density": _verify_density, "fubini": _verify_fubini,
          "gamma-identity": _verify_gamma_identity}


def cmd_verify(cfg: RunConfig, what: str) -> int:
    out = _out_dir(cfg)
    code = VERIFY[what](cfg, out)
    grid = None
    if "dt" in cfg.data["grid"] and "n" in cfg.data["grid"]:
        grid = cfg.grid()
    _write_json(out / "manifest.json", _manifest(cfg, f"verify {what}", grid=grid))
    return code


# -- entry point ---------------------------------------------------------------------------


GLOBAL_DEFAULTS = {"config": None, "seed": None, "out": None, "force": False, "overrides": None}


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; SUPPRESS keeps the
    # subparser from overwriting a value given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="TOML config or a previous manifest.json")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--force", action="store_true",
                        help="simulate even when the integrability check fails")
    common.add_argument("--set", action="append", metavar="K=V", dest="overrides",
                        help="override a config key (dotted path), repeatable")
    p = argparse.ArgumentParser(prog="ctma", parents=[common],
                                description="Lévy-driven moving averages: checks, simulation, "
                                            "inversion and verification.",
                                epilog="exit codes: 0 ok, 1 integrable not invertible, "
                                       "2 not integrable, 3 horizon coverage, 64 config, "
                                       "65 domain, 70 numerical failure")
    p.add_argument("--version", action="version", version=f"ctma {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="integrability and invertibility")
    sub.add_parser("simulate", parents=[common], help="simulate increments and the CTMA path")
    sub.add_parser("invert", parents=[common], help="recover the driving Lévy path")
    v = sub.add_parser("verify", parents=[common], help="Monte Carlo and numerical checks")
    v.add_argument("what", choices=sorted(VERIFY))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        cfg = load_config(args.config, args.overrides or (), seed=args.seed, out=args.out)
        if args.command == "check":
            return cmd_check(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.force)
        if args.command == "invert":
            return cmd_invert(cfg)
        return cmd_verify(cfg, args.what)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CoverageError as exc:
        print(f"coverage error: {exc} (required horizon {exc.required:g})", file=sys.stderr)
        return EXIT_COVERAGE
    except (QuadratureError, InconsistentVerdict, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
