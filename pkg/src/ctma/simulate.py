"""Gridded Lévy increments and CTMA paths by discretised stochastic convolution.

Increment ``j`` covers the cell ``[t0 + j dt, t0 + (j + 1) dt)``. A CTMA value
at ``t_i = t0 + i dt`` uses the increments of cells ending at or before
``t_i`` (and, for anticausal kernels, after it):

    X(t_i) = sum_k w_k dL_{i-1-k},   w_k = (1/dt) int_{k dt}^{(k+1) dt} f(u) du.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, signal

from .kernels import Kernel
from .levy import LevyMeasure, LevyTriplet

BLOCK = 1 << 16
SMALL_JUMP_RATIO = 0.01
EPS_FLOOR = 1e-6
JUMP_BUDGET = 2e7
FFT_THRESHOLD = 1e5

_COMPONENTS = {"gauss": 0, "small": 1, "count": 2, "size": 3}


class CoverageError(ValueError):
    """The increment path does not cover the kernel horizon."""

    def __init__(self, message: str, required: float):
        super().__init__(message)
        self.required = required


@dataclass(frozen=True)
class Grid:
    """``n`` points ``t0 + i dt``."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid needs n >= 1")
        if not self.dt > 0:
            raise ValueError("grid needs dt > 0")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * self.n


@dataclass(frozen=True)
class SamplePath:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.grid.n:
            raise ValueError("path length does not match its grid")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def restrict(self, t_lo: float, t_hi: float) -> "SamplePath":
        """Sub-path on grid points in ``[t_lo, t_hi]`` (half a cell of slack)."""
        t = self.times
        m = (t >= t_lo - 0.5 * self.grid.dt) & (t <= t_hi + 0.5 * self.grid.dt)
        idx = np.flatnonzero(m)
        if len(idx) == 0:
            raise ValueError("restriction is empty")
        return SamplePath(Grid(float(t[idx[0]]), self.grid.dt, len(idx)), self.values[idx])


@dataclass(frozen=True)
class IncrementPath:
    """Increments ``dL`` over the ``grid.n`` cells starting at ``grid.times``."""

    grid: Grid
    increments: np.ndarray
    seed: int | None = None
    scheme: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.increments) != self.grid.n:
            raise ValueError("increment count does not match its grid")

    def levy_path(self) -> SamplePath:
        """``L`` at the ``n + 1`` cell edges, pinned to 0 at ``t0``."""
        vals = np.concatenate([[0.0], np.cumsum(self.increments)])
        return SamplePath(Grid(self.grid.t0, self.grid.dt, self.grid.n + 1), vals)


# -- increments ------------------------------------------------------------------------


def _rng(seed: int, block: int, component: str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(block, _COMPONENTS[component]))
    return np.random.Generator(np.random.Philox(ss))


def small_jump_threshold(nu: LevyMeasure, dt: float, horizon: float,
                         budget: float = JUMP_BUDGET) -> float:
    """Jump threshold ``eps`` for the small-jump Gaussian substitution.

    The largest ``eps`` with ``sigma(eps) <= 0.01 sqrt(dt)``, floored at 1e-6,
    then raised if needed so that the expected number of exact jumps over
    ``horizon`` stays within ``budget``. Zero for finite activity.
    """
    if nu.finite_activity:
        return 0.0
    target = (SMALL_JUMP_RATIO ** 2) * dt
    f = lambda le: nu.small_jump_variance(math.exp(le)) - target
    if f(math.log(EPS_FLOOR)) >= 0:
        eps = EPS_FLOOR
    elif f(0.0) <= 0:
        eps = 1.0
    else:
        eps = math.exp(optimize.brentq(f, math.log(EPS_FLOOR), 0.0, xtol=1e-6))
    if nu.tail_mass(eps) * horizon > budget:
        g = lambda le: nu.tail_mass(math.exp(le)) * horizon - budget
        eps = math.exp(optimize.brentq(g, math.log(eps), math.log(1e3), xtol=1e-6))
    return eps


def increment_scheme(triplet: LevyTriplet, dt: float, horizon: float) -> dict:
    nu = triplet.nu
    eps = small_jump_threshold(nu, dt, horizon)
    if nu.is_zero:
        rate, comp, var = 0.0, 0.0, 0.0
    else:
        rate = nu.tail_mass(eps)
        comp = triplet.tau_compensator(eps)
        var = nu.small_jump_variance(eps)
    return {"epsilon": eps, "small_jump_sd": math.sqrt(var), "jump_rate": rate,
            "compensator": comp, "gamma": triplet.gamma, "b": triplet.b,
            "block": BLOCK, "bit_generator": "Philox"}


def _block_increments(triplet: LevyTriplet, dt: float, n: int, seed: int, block: int,
                      scheme: dict, sampler) -> np.ndarray:
    out = np.full(n, triplet.gamma * dt - scheme["compensator"] * dt)
    if triplet.b > 0:
        out += math.sqrt(triplet.b * dt) * _rng(seed, block, "gauss").standard_normal(n)
    if scheme["small_jump_sd"] > 0:
        out += scheme["small_jump_sd"] * math.sqrt(dt) * _rng(seed, block, "small").standard_normal(n)
    if scheme["jump_rate"] > 0:
        counts = _rng(seed, block, "count").poisson(scheme["jump_rate"] * dt, n)
        total = int(counts.sum())
        if total:
            sizes = sampler(_rng(seed, block, "size"), total)
            out += np.bincount(np.repeat(np.arange(n), counts), weights=sizes, minlength=n)
    return out


def simulate_increments(triplet: LevyTriplet, grid: Grid, seed: int) -> IncrementPath:
    """Lévy increments on ``grid``; bit-identical for equal inputs.

    Each block of ``BLOCK`` cells draws from its own counter-based stream per
    component (Gaussian, small jumps, jump counts, jump sizes), so the result
    does not depend on the order in which blocks are generated.
    """
    scheme = increment_scheme(triplet, grid.dt, grid.n * grid.dt)
    sampler = None
    if scheme["jump_rate"] > 0:
        _, sampler = triplet.nu.jump_sampler(scheme["epsilon"])
    parts = []
    for block, start in enumerate(range(0, grid.n, BLOCK)):
        m = min(BLOCK, grid.n - start)
        parts.append(_block_increments(triplet, grid.dt, m, seed, block, scheme, sampler))
    return IncrementPath(grid, np.concatenate(parts), int(seed), scheme)


def iter_increment_blocks(triplet: LevyTriplet, dt: float, n_cells: int, n_paths: int,
                          seed: int, paths_per_block: int = 4096):
    """Yield ``(m, n_cells)`` arrays of independent increment rows, blockwise seeded.

    Block ``j`` always holds paths ``j * paths_per_block`` onwards and draws
    from its own streams, so results do not depend on how blocks are consumed.
    """
    # the jump budget covers all paths together
    scheme = increment_scheme(triplet, dt, n_paths * n_cells * dt)
    sampler = None
    if scheme["jump_rate"] > 0:
        _, sampler = triplet.nu.jump_sampler(scheme["epsilon"])
    for block, start in enumerate(range(0, n_paths, paths_per_block)):
        m = min(paths_per_block, n_paths - start)
        flat = _block_increments(triplet, dt, m * n_cells, seed, block, scheme, sampler)
        yield flat.reshape(m, n_cells)


def simulate_increment_matrix(triplet: LevyTriplet, dt: float, n_cells: int, n_paths: int,
                              seed: int, paths_per_block: int = 4096) -> np.ndarray:
    """``(n_paths, n_cells)`` independent increment rows (see ``iter_increment_blocks``)."""
    return np.vstack(list(iter_increment_blocks(triplet, dt, n_cells, n_paths, seed,
                                                paths_per_block)))


def aggregate(inc: IncrementPath, factor: int) -> IncrementPath:
    """Coarsen by summing ``factor`` consecutive increments (drops a ragged end)."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    n = inc.grid.n // factor
    if n < 1:
        raise ValueError("too few increments to aggregate")
    sums = inc.increments[: n * factor].reshape(n, factor).sum(axis=1)
    grid = Grid(inc.grid.t0, inc.grid.dt * factor, n)
    return IncrementPath(grid, sums, inc.seed, {**inc.scheme, "aggregated": factor})


# -- CTMA ------------------------------------------------------------------------------


def kernel_weights(kernel: Kernel, dt: float, warmup: float) -> tuple[np.ndarray, int, int]:
    """Cell-averaged weights ``w_k`` for ``k0 <= k < k1`` and the range itself."""
    k0, k1 = kernel.weight_range(dt, warmup)
    return kernel.cell_weights(dt, k0, k1), k0, k1


def convolve(x: np.ndarray, w: np.ndarray, method: str = "auto") -> np.ndarray:
    """Valid-mode convolution, by FFT when ``len(x) * len(w)`` is large."""
    if method == "auto":
        method = "fft" if len(x) * len(w) > FFT_THRESHOLD else "direct"
    if method == "fft":
        return signal.fftconvolve(x, w, mode="valid")
    return np.convolve(x, w, mode="valid")


def simulate_ctma(kernel: Kernel, increments: IncrementPath, warmup: float | None = None,
                  *, method: str = "auto", strict: bool = True) -> SamplePath:
    """``X(t_i) = sum_k w_k dL_{i-1-k}`` on the sub-grid covered by the increments.

    ``warmup`` is the kernel truncation horizon (default: twice the distance
    where ``|f| < 1e-12``). With ``strict`` a warmup shorter than that
    distance is refused.
    """
    dt = increments.grid.dt
    horizon = kernel.horizon(1e-12)
    if warmup is None:
        warmup = 2.0 * horizon
    if strict and warmup < horizon * (1 - 1e-9):
        raise CoverageError(f"warmup {warmup} is shorter than the kernel horizon {horizon:.6g}",
                            horizon)
    w, k0, k1 = kernel_weights(kernel, dt, warmup)
    n = increments.grid.n
    if n < len(w):
        span = len(w) * dt
        raise CoverageError(f"increments span {n * dt:.6g} but the kernel needs {span:.6g}", span)
    vals = convolve(increments.increments, w, method)
    grid = Grid(increments.grid.t0 + k1 * dt, dt, len(vals))
    return SamplePath(grid, vals)


def simulate_ou_exact(lam: float, increments: IncrementPath, x0: float = 0.0,
                      warmup: float = 0.0) -> SamplePath:
    """``X_{i+1} = e^{-lam dt} X_i + e^{-lam dt / 2} dL_i`` from ``X_0 = x0``.

    Values at the ``n + 1`` cell edges; points before ``t0 + warmup`` are dropped.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    dt = increments.grid.dt
    a = math.exp(-lam * dt)
    c = math.exp(-0.5 * lam * dt)
    u = np.concatenate([[x0], c * increments.increments])
    vals = signal.lfilter([1.0], [1.0, -a], u)
    skip = int(math.ceil(warmup / dt - 1e-9))
    grid = Grid(increments.grid.t0 + skip * dt, dt, len(vals) - skip)
    return SamplePath(grid, vals[skip:])


# -- CSV ---------------------------------------------------------------------------------


def write_csv(path: SamplePath | IncrementPath, file) -> None:
    """``t,value`` rows with 17 significant digits."""
    values = path.values if isinstance(path, SamplePath) else path.increments
    times = path.grid.times
    with open(file, "w", newline="") as fh:
        fh.write("t,value\n")
        for t, v in zip(times, values):
            fh.write(f"{t:.17g},{v:.17g}\n")


def read_csv(file) -> SamplePath:
    with open(file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["t", "value"]:
            raise ValueError(f"{file}: expected header t,value")
        rows = np.array([[float(a), float(b)] for a, b in reader])
    if len(rows) == 0:
        raise ValueError(f"{file}: no rows")
    t = rows[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    if len(t) > 2 and not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError(f"{file}: grid is not uniform")
    return SamplePath(Grid(float(t[0]), dt, len(t)), rows[:, 1])


def read_increments_csv(file, seed: int | None = None) -> IncrementPath:
    p = read_csv(file)
    return IncrementPath(p.grid, p.values, seed, {"source": str(Path(file))})
