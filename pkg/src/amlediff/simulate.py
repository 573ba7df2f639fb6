"""Euler-Maruyama simulation, subsampling and CSV persistence of paths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError, SimulationDivergedError
from .numerics import NoiseSource, standard_normals


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise InputError("horizon must be positive")
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InputError("n_steps must be a positive integer")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class Path:
    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.shape[0] != self.grid.n_steps + 1:
            raise InputError(f"path has {states.shape[0]} rows, expected {self.grid.n_steps + 1}")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def k(self) -> int:
        return self.states.shape[1]

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]

    def __eq__(self, other):
        if not isinstance(other, Path):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.states, other.states)


def euler_simulate_many(model, theta, x0, grid: TimeGrid, noises) -> np.ndarray:
    """Simulate one Euler path per NoiseSource, stepping all replicates together.

    Returns states of shape ``(len(noises), n_steps + 1, k)``. Each replicate
    is bitwise identical to simulating it alone: every operation is
    elementwise across replicates and the diffusion product is summed in a
    fixed column order.
    """
    from .model import check_states, check_theta

    theta = check_theta(model, theta)
    x0 = check_states(model, np.asarray(x0, dtype=float).reshape(model.k))
    k, n, m = model.k, grid.n_steps, len(noises)
    sqdt = math.sqrt(grid.dt)
    dW = np.empty((m, n, k))
    for r, noise in enumerate(noises):
        dW[r] = standard_normals(noise, n * k).reshape(n, k)
    dW *= sqdt

    out = np.empty((m, n + 1, k))
    out[:, 0] = x0
    x = out[:, 0].copy()
    with np.errstate(over="ignore", invalid="ignore"):
        _euler_loop(model, theta, grid.dt, dW, out, x)
    return out


def _euler_loop(model, theta, dt, dW, out, x):
    k, n = out.shape[2], out.shape[1] - 1
    for i in range(1, n + 1):
        mu = model.drift(x, theta)
        nu = model.diffusion(x)
        w = dW[:, i - 1]
        step = mu * dt
        for j in range(k):
            step = step + nu[:, :, j] * w[:, j, None]
        x = model.domain_guard(x + step)
        if not np.all(np.isfinite(x)):
            raise SimulationDivergedError(f"non-finite state at step {i}", step=i)
        out[:, i] = x


def euler_simulate(model, theta, x0, grid: TimeGrid, noise: NoiseSource) -> Path:
    """X_i = guard(X_{i-1} + mu dt + nu(X_{i-1}) sqrt(dt) Z_i).

    The k normals of step i are drawn in component order, steps in order.
    """
    return Path(grid, euler_simulate_many(model, theta, x0, grid, [noise])[0])


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise InputError(f"n_steps={n} is not a power of two")
    return n.bit_length() - 1


def subsample(path: Path, level_k: int) -> Path:
    """Keep every 2^(l-k)-th point of a path with 2^l steps."""
    l = _log2_exact(path.grid.n_steps)
    if not 0 <= level_k <= l:
        raise InputError(f"level {level_k} is outside [0, {l}]")
    stride = 1 << (l - level_k)
    return Path(TimeGrid(path.grid.horizon, 1 << level_k), path.states[::stride])


def write_path(path: Path, destination) -> None:
    """CSV: header ``t,x1,...,xk`` then one row per grid point, 17 significant digits."""
    header = ",".join(["t"] + [f"x{i + 1}" for i in range(path.k)])
    lines = [header]
    for t, row in zip(path.grid.times, path.states):
        lines.append(",".join(format(float(v), ".17g") for v in (t, *row)))
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_path(source) -> Path:
    with open(source, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].split(",")
    if len(header) < 2 or header[0] != "t" or header[1:] != [f"x{i + 1}" for i in range(len(header) - 1)]:
        raise ParseError("header must be t,x1,...,xk", line=1)
    ncol = len(header)
    times, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != ncol:
            raise ParseError(f"expected {ncol} columns, found {len(parts)}", line=lineno)
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"bad number ({exc})", line=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite value", line=lineno)
        if times and vals[0] <= times[-1]:
            raise ParseError("times must be strictly increasing", line=lineno)
        times.append(vals[0])
        rows.append(vals[1:])
    if len(rows) < 2:
        raise ParseError("a path needs at least two grid points", line=len(lines))
    if times[0] != 0.0:
        raise ParseError("first time must be 0", line=2)
    n = len(rows) - 1
    grid = TimeGrid(times[-1], n)
    steps = np.diff(times)
    if np.max(np.abs(steps - grid.dt)) > 1e-9 * grid.dt:
        bad = int(np.argmax(np.abs(steps - grid.dt))) + 3
        raise ParseError("grid is not equidistant", line=bad)
    return Path(grid, np.array(rows))
