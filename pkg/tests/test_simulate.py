import math

import numpy as np
import pytest

from amlediff.errors import InputError, ParseError, SimulationDivergedError
from amlediff.model import ModelSpec
from amlediff.numerics import NoiseSource, standard_normals
from amlediff.simulate import (
    Path,
    TimeGrid,
    euler_simulate,
    euler_simulate_many,
    read_path,
    subsample,
    write_path,
)


def driftless(k=2, nu=None):
    nu = np.eye(k) if nu is None else np.asarray(nu, dtype=float)
    return ModelSpec(
        "bm", k, 1,
        drift=lambda x, th: np.zeros(np.shape(x)),
        diffusion=lambda x: np.broadcast_to(nu, np.shape(x)[:-1] + (k, k)).copy(),
    )


def test_grid():
    g = TimeGrid(2.0, 8)
    assert g.dt == 0.25
    assert abs(g.dt * g.n_steps - g.horizon) <= 1e-12 * g.horizon
    assert np.allclose(g.times, np.arange(9) * 0.25)
    with pytest.raises(InputError):
        TimeGrid(0.0, 3)
    with pytest.raises(InputError):
        TimeGrid(1.0, 0)


def test_zero_noise_is_explicit_euler(constant_drift):
    m = ModelSpec("det", 1, 1, drift=constant_drift.drift,
                  diffusion=lambda x: np.zeros(np.shape(x)[:-1] + (1, 1)))
    p = euler_simulate(m, [1.0], [0.0], TimeGrid(1.0, 4), NoiseSource(1))
    assert np.array_equal(p.states[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])


def test_zero_noise_ode_nonlinear():
    # dx = -theta x dt, explicit Euler: x_i = (1 - theta dt)^i x0
    m = ModelSpec("decay", 1, 1, drift=lambda x, th: -th[0] * x,
                  diffusion=lambda x: np.zeros(np.shape(x)[:-1] + (1, 1)))
    p = euler_simulate(m, [0.7], [2.0], TimeGrid(1.0, 10), NoiseSource(3))
    x = 2.0
    for i in range(1, 11):
        x = x + (-0.7 * x) * 0.1
        assert p.states[i, 0] == x


def test_driftless_endpoint_is_scaled_noise_sum():
    grid = TimeGrid(1.0, 16)
    noise = NoiseSource(5, 2)
    p = euler_simulate(driftless(), [0.0], [0.0, 0.0], grid, noise)
    z = standard_normals(noise, 32).reshape(16, 2)
    assert np.allclose(p.states[-1], math.sqrt(grid.dt) * z.sum(axis=0), atol=1e-14)


def test_increment_covariance_matches_dt_S():
    nu = np.array([[1.0, 0.0], [0.5, 0.8]])
    grid = TimeGrid(1.0, 1 << 17)
    p = euler_simulate(driftless(nu=nu), [0.0], [0.0, 0.0], grid, NoiseSource(77))
    inc = np.diff(p.states, axis=0)
    n = inc.shape[0]
    target = grid.dt * nu @ nu.T
    cov = inc.T @ inc / n
    # SE of a sample second moment of Gaussians: sqrt((s_ii s_jj + s_ij^2) / n)
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target ** 2) / n)
    assert np.all(np.abs(cov - target) <= 3 * se)


def test_batched_equals_single(heston, heston_params):
    grid = TimeGrid(1.0, 256)
    noises = [NoiseSource(11, s) for s in range(5)]
    many = euler_simulate_many(heston, heston_params.theta, heston_params.initial_state, grid, noises)
    for s, noise in enumerate(noises):
        single = euler_simulate(heston, heston_params.theta, heston_params.initial_state, grid, noise)
        assert np.array_equal(single.states, many[s])


def test_determinism(heston, heston_params):
    grid = TimeGrid(1.0, 512)
    a = euler_simulate(heston, heston_params.theta, heston_params.initial_state, grid, NoiseSource(3, 9))
    b = euler_simulate(heston, heston_params.theta, heston_params.initial_state, grid, NoiseSource(3, 9))
    assert a == b


def test_heston_paper_path_positive(heston, heston_params):
    grid = TimeGrid(1.0, 1 << 12)
    for s in range(5):
        p = euler_simulate(heston, heston_params.theta, heston_params.initial_state, grid, NoiseSource(1, s))
        assert np.all(np.isfinite(p.states))
        assert np.all(p.states[:, 0] > 0)
        assert np.array_equal(p.states[0], heston_params.initial_state)


def test_divergence_reports_step():
    m = ModelSpec("blowup", 1, 1, drift=lambda x, th: th[0] * x * x,
                  diffusion=lambda x: np.zeros(np.shape(x)[:-1] + (1, 1)))
    with pytest.raises(SimulationDivergedError) as info:
        euler_simulate(m, [1e10], [1e10], TimeGrid(1.0, 50), NoiseSource(0))
    assert info.value.step is not None and info.value.step >= 1


def _path(n, k=1, seed=0):
    rng = np.random.default_rng(seed)
    return Path(TimeGrid(1.0, n), rng.normal(size=(n + 1, k)))


def test_subsample_examples():
    p = _path(8)
    assert subsample(p, 3) == p
    s = subsample(p, 1)
    assert np.array_equal(s.states, p.states[[0, 4, 8]])
    assert s.grid.dt == 0.5


def test_subsample_heston_level5(heston_paths):
    fine = heston_paths[0]  # 2^10 steps
    s = subsample(fine, 5)
    assert s.states.shape[0] == 33
    assert np.array_equal(s.states[0], fine.states[0]) and np.array_equal(s.states[-1], fine.states[-1])


@pytest.mark.parametrize("k2", range(0, 7))
def test_subsample_composition(k2):
    p = _path(64, k=2)
    for k1 in range(0, k2 + 1):
        assert subsample(subsample(p, k2), k1) == subsample(p, k1)


def test_subsample_rejects():
    with pytest.raises(InputError):
        subsample(_path(6), 1)
    with pytest.raises(InputError):
        subsample(_path(8), 4)


def test_path_file_two_steps(tmp_path):
    p = Path(TimeGrid(1.0, 2), [[0.1], [0.2], [-0.3]])
    f = tmp_path / "p.csv"
    write_path(p, f)
    text = f.read_bytes().decode("utf-8")
    lines = text.split("\n")
    assert lines[0] == "t,x1" and lines[1:4] == ["0,0.10000000000000001", "0.5,0.20000000000000001", "1,-0.29999999999999999"]
    assert text.endswith("\n") and "\r" not in text
    assert read_path(f) == p


def test_path_round_trip_heston(tmp_path, heston_paths):
    f = tmp_path / "h.csv"
    write_path(heston_paths[1], f)
    back = read_path(f)
    assert np.array_equal(back.states, heston_paths[1].states)
    assert back.grid == heston_paths[1].grid


@pytest.mark.parametrize(
    "body,line",
    [
        ("t,x1,x2\n0,1,2\n0.5,1\n1,2,3\n", 3),
        ("t,x1\n0,1\n0.5,abc\n1,2\n", 3),
        ("t,x1\n0,1\n0.5,2\n0.5,3\n", 4),
        ("time,x1\n0,1\n1,2\n", 1),
        ("t,x1\n0,1,\n1,2\n", 2),
    ],
)
def test_read_path_errors(tmp_path, body, line):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(ParseError) as info:
        read_path(f)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
