"""Linear SDE benchmarks and a heuristic data-driven independence test.

Simulation uses the Euler-Maruyama scheme
``X[t+1] = X[t] + (A X[t] + c) dt + D sqrt(dt) Z`` with one independent
standard-normal draw per step, path and coordinate.  Each path consumes
its own RNG stream derived from (seed, path index), so results are
bitwise reproducible and paths can be generated in any order.

The independence test asks whether coordinate j's increments over the
future window [s, s+h] carry information about coordinate i's increments
over the past window [0, s] once summary features of the conditioning
coordinates are regressed out.  All features are functions of increments
only, so every decision is invariant under shifting whole paths by a
constant.  This is an engineering stand-in for a proper path-space test:
calibrated by permutation, useful for the benchmark systems, and nothing
more.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .graphs import Dmg
from .discovery import CiOracle

OFFDIAG_LOW, OFFDIAG_HIGH = 1.0, 1.5
DIAG_BOUND = 0.5
OFFSET_HIGH = 0.1
DIFFUSION_LOW, DIFFUSION_HIGH = 0.3, 0.5
STABILITY_EIG_CAP = 2.0

DEFAULT_HORIZON = 1.0
DEFAULT_SPLIT = 0.5
DEFAULT_STEPS = 200


class DegenerateDataError(ValueError):
    """Residuals without variance: correlation is undefined."""


@dataclass(frozen=True)
class LinearSdeParams:
    """Coefficients of dX = (A X + c) dt + diag(diffusion) dW."""

    drift: np.ndarray
    offset: np.ndarray
    diffusion: np.ndarray
    x0: np.ndarray
    adjacency: Optional[Dmg] = None

    def __post_init__(self):
        d = self.drift.shape[0]
        if self.drift.shape != (d, d):
            raise ValueError("drift must be square")
        for name, arr in (("offset", self.offset), ("diffusion", self.diffusion), ("x0", self.x0)):
            if arr.shape != (d,):
                raise ValueError(f"{name} must have shape ({d},)")
        if np.any(self.diffusion < 0):
            raise ValueError("diffusion entries must be non-negative")
        if self.adjacency is not None:
            if self.adjacency.d != d:
                raise ValueError("adjacency node count does not match drift dimension")
            for i in range(d):
                for j in range(d):
                    if i != j and self.drift[i, j] != 0 and not self.adjacency.has_directed(j, i):
                        raise ValueError(
                            f"drift[{i},{j}] nonzero but edge {j}->{i} not in adjacency"
                        )

    @property
    def d(self) -> int:
        return self.drift.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "drift": self.drift.tolist(),
            "offset": self.offset.tolist(),
            "diffusion": self.diffusion.tolist(),
            "x0": self.x0.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "LinearSdeParams":
        return cls(
            drift=np.asarray(data["drift"], dtype=float),
            offset=np.asarray(data["offset"], dtype=float),
            diffusion=np.asarray(data["diffusion"], dtype=float),
            x0=np.asarray(data["x0"], dtype=float),
        )


def sample_params(adjacency: Dmg, seed: int) -> LinearSdeParams:
    """Draw coefficients onto the adjacency pattern.

    Cross couplings a_ij (edge j -> i) get a sign times a magnitude in
    [1, 1.5); self couplings are uniform on [-0.5, 0.5]; offsets uniform on
    [0, 0.1); diffusions uniform on [0.3, 0.5).  Draws whose drift matrix
    has an eigenvalue with real part above 2 are redrawn, to keep the
    benchmark paths bounded over the unit horizon.
    """
    if not adjacency.is_dg:
        raise ValueError("adjacency must be a directed graph")
    rng = np.random.default_rng(seed)
    d = adjacency.d
    for attempt in range(1000):
        drift = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                if not adjacency.has_directed(j, i):
                    continue
                if i == j:
                    drift[i, i] = rng.uniform(-DIAG_BOUND, DIAG_BOUND)
                else:
                    sign = 1.0 if rng.integers(0, 2) else -1.0
                    drift[i, j] = sign * rng.uniform(OFFDIAG_LOW, OFFDIAG_HIGH)
        offset = rng.uniform(0.0, OFFSET_HIGH, size=d)
        diffusion = rng.uniform(DIFFUSION_LOW, DIFFUSION_HIGH, size=d)
        if np.max(np.linalg.eigvals(drift).real) <= STABILITY_EIG_CAP:
            return LinearSdeParams(
                drift=drift,
                offset=offset,
                diffusion=diffusion,
                x0=np.zeros(d),
                adjacency=adjacency,
            )
    raise RuntimeError("could not draw a stable drift matrix in 1000 attempts")


@dataclass(frozen=True)
class PathBundle:
    """A batch of simulated paths on a shared uniform time grid."""

    grid: np.ndarray
    values: np.ndarray  # (n_paths, n_steps + 1, d)
    seed: int
    params: Optional[LinearSdeParams] = None

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1] - 1

    @property
    def d(self) -> int:
        return self.values.shape[2]

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def grid_index(self, t: float) -> int:
        """Index of time t on the grid; t must lie on it, within rounding."""
        dt = self.grid[1] - self.grid[0]
        k = int(round(t / dt))
        if not 0 <= k <= self.n_steps or abs(self.grid[k] - t) > 1e-9:
            raise ValueError(f"time {t} not on the simulation grid")
        return k

    def save(self, path: str | Path) -> None:
        """Binary values at `path`, JSON sidecar at `path` + '.json'."""
        path = Path(path)
        with open(path, "wb") as f:
            np.save(f, self.values)
        sidecar = {
            "d": self.d,
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "T": self.horizon,
            "seed": self.seed,
            "params": None if self.params is None else self.params.to_json_dict(),
        }
        with open(str(path) + ".json", "w") as f:
            json.dump(sidecar, f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "PathBundle":
        path = Path(path)
        with open(path, "rb") as f:
            values = np.load(f)
        with open(str(path) + ".json") as f:
            sidecar = json.load(f)
        params = None
        if sidecar.get("params") is not None:
            params = LinearSdeParams.from_json_dict(sidecar["params"])
        grid = np.linspace(0.0, sidecar["T"], sidecar["n_steps"] + 1)
        return cls(grid=grid, values=values, seed=sidecar["seed"], params=params)


class SimulationError(RuntimeError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite state at step {step}")


def simulate(
    params: LinearSdeParams,
    n_paths: int,
    n_steps: int = DEFAULT_STEPS,
    horizon: float = DEFAULT_HORIZON,
    seed: int = 0,
) -> PathBundle:
    """Euler-Maruyama paths of the linear system."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    d = params.d
    dt = horizon / n_steps
    sq = np.sqrt(dt)
    noise = np.empty((n_paths, n_steps, d))
    for p in range(n_paths):
        noise[p] = np.random.default_rng((seed, p)).standard_normal((n_steps, d))
    values = np.empty((n_paths, n_steps + 1, d))
    values[:, 0, :] = params.x0
    a_t = params.drift.T
    for t in range(n_steps):
        x = values[:, t, :]
        values[:, t + 1, :] = x + (x @ a_t + params.offset) * dt + noise[:, t, :] * (
            params.diffusion * sq
        )
        if not np.all(np.isfinite(values[:, t + 1, :])):
            raise SimulationError(step=t)
    grid = np.linspace(0.0, horizon, n_steps + 1)
    return PathBundle(grid=grid, values=values, seed=seed, params=params)


# -- data-driven conditional independence -----------------------------------


def _segment_features(bundle: PathBundle, coord: int, k0: int, k1: int) -> np.ndarray:
    """Per-path summary of one coordinate over grid window [k0, k1].

    Columns: terminal increment, realized quadratic variation, increment
    over the second half of the window.  Increments only, so constants
    shift out.
    """
    x = bundle.values[:, k0 : k1 + 1, coord]
    terminal = x[:, -1] - x[:, 0]
    steps = np.diff(x, axis=1)
    qvar = np.sum(steps * steps, axis=1)
    mid = (k1 - k0) // 2
    late = x[:, -1] - x[:, mid]
    return np.column_stack([terminal, qvar, late])


def _residualize(y: np.ndarray, z: Optional[np.ndarray]) -> np.ndarray:
    design = np.ones((y.shape[0], 1))
    if z is not None and z.size:
        design = np.column_stack([design, z])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef


def _max_abs_corr(u: np.ndarray, v: np.ndarray) -> float:
    us = u / np.linalg.norm(u, axis=0)
    vs = v / np.linalg.norm(v, axis=0)
    return float(np.max(np.abs(us.T @ vs)))


def ci_test_data(
    bundle: PathBundle,
    i: int,
    j: int,
    cond: Iterable[int],
    s: float = DEFAULT_SPLIT,
    h: float = DEFAULT_SPLIT,
    alpha: float = 0.05,
    n_permutations: int = 200,
    perm_seed: Optional[int] = None,
) -> bool:
    """Accept or reject that j's future is independent of i's past.

    Features of i are taken on [0, s], of j on [s, s+h].  Conditioning
    coordinates contribute features on [0, s]; those different from j
    additionally on [0, s+h], mirroring how the future window of a
    conditioned coordinate is only usable when it is not the target.  Both
    feature blocks are regressed on the conditioning block, and the
    maximum absolute cross-correlation of the residuals is compared
    against its permutation distribution.  True means independence is
    accepted (p-value >= alpha).
    """
    if bundle.n_paths < 20:
        raise ValueError("need at least 20 paths")
    cond_set = sorted(set(cond))
    for v in (i, j, *cond_set):
        if not 0 <= v < bundle.d:
            raise ValueError(f"coordinate {v} out of range")
    if i in cond_set:
        return True  # conditioning on the tested source: trivially independent
    ks0 = bundle.grid_index(0.0)
    ks = bundle.grid_index(s)
    if s + h > bundle.horizon + 1e-9:
        raise ValueError(f"window end {s + h} beyond the horizon {bundle.horizon}")
    ke = bundle.grid_index(s + h)

    feats_i = _segment_features(bundle, i, ks0, ks)
    feats_j = _segment_features(bundle, j, ks, ke)
    blocks = []
    for k in cond_set:
        blocks.append(_segment_features(bundle, k, ks0, ks))
        if k != j:
            blocks.append(_segment_features(bundle, k, ks0, ke))
    z = np.column_stack(blocks) if blocks else None

    res_i = _residualize(feats_i, z)
    res_j = _residualize(feats_j, z)
    if np.all(res_i.std(axis=0) < 1e-12) or np.all(res_j.std(axis=0) < 1e-12):
        raise DegenerateDataError("residual features carry no variance")
    # drop individual dead columns (e.g. exactly explained by conditioning)
    res_i = res_i[:, res_i.std(axis=0) > 1e-12]
    res_j = res_j[:, res_j.std(axis=0) > 1e-12]

    observed = _max_abs_corr(res_i, res_j)
    if perm_seed is None:
        perm_seed = bundle.seed
    kmask = 0
    for k in cond_set:
        kmask |= 1 << k
    rng = np.random.default_rng((perm_seed, i, j, kmask, 0xC1))
    n = res_i.shape[0]
    exceed = 0
    for _ in range(n_permutations):
        perm = rng.permutation(n)
        if _max_abs_corr(res_i, res_j[perm]) >= observed:
            exceed += 1
    p_value = (1 + exceed) / (1 + n_permutations)
    return p_value >= alpha


def data_oracle(
    bundle: PathBundle,
    s: float = DEFAULT_SPLIT,
    h: float = DEFAULT_SPLIT,
    alpha: float = 0.05,
    n_permutations: int = 200,
    perm_seed: Optional[int] = None,
) -> CiOracle:
    """Adapt the data test to the discovery oracle interface."""

    def oracle(i: int, j: int, k: frozenset[int]) -> bool:
        return ci_test_data(
            bundle, i, j, k, s=s, h=h, alpha=alpha,
            n_permutations=n_permutations, perm_seed=perm_seed,
        )

    return oracle
