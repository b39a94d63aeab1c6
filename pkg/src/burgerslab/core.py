"""Grids, norms, path metrics and noise generation.

State fields live on M interior nodes of [0, 1] with homogeneous Dirichlet
boundary values; they are plain 1-D float arrays of length M.  The discrete
H norm is the L^2 norm (midpoint weights dx), the discrete V norm is the
H^1_0 seminorm built from all M+1 jumps including the two boundary jumps
against the implicit zeros.

Paths are (steps+1, M) arrays, one row per time node.  Their distance is
measured in C([0,T], H) ∩ L^2([0,T], V): the canonical squared form is
sup_t |p-q|_H^2 + ∫ ||p-q||_V^2 dt with left-endpoint quadrature in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpatialGrid",
    "TimeMesh",
    "NoisePath",
    "PathDistance",
    "sine_field",
    "h_norm",
    "v_norm",
    "sup_norm",
    "path_distance",
    "sample_noise",
    "exp_weighted_sup",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid of M interior nodes x_i = i/(M+1), i = 1..M."""

    m: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"grid needs at least 2 interior nodes, got m={self.m}")

    @property
    def dx(self) -> float:
        return 1.0 / (self.m + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.dx * np.arange(1, self.m + 1)


@dataclass(frozen=True)
class TimeMesh:
    """Uniform time mesh 0 = t_0 < ... < t_steps = T."""

    t_final: float
    steps: int

    def __post_init__(self) -> None:
        if self.t_final <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.t_final}")
        if self.steps < 1:
            raise ValueError(f"need at least one step, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.t_final / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.steps + 1)


@dataclass(frozen=True)
class NoisePath:
    """d channels of Brownian increments ΔW_{k,j} on a time mesh.

    increments has shape (steps, d); entry (k, j) is W_j(t_{k+1}) - W_j(t_k).
    Reproducible from (seed, path_index) via a counter-based generator, so
    paths drawn in parallel with distinct indices never overlap.
    """

    mesh: TimeMesh
    d: int
    increments: np.ndarray
    seed: int
    path_index: int = 0

    def __post_init__(self) -> None:
        if self.increments.shape != (self.mesh.steps, self.d):
            raise ValueError(
                f"increments shape {self.increments.shape} does not match "
                f"(steps, d) = ({self.mesh.steps}, {self.d})"
            )
        self.increments.setflags(write=False)


@dataclass(frozen=True)
class PathDistance:
    """Distance record between two discrete paths.

    squared = sup_h**2 + l2_v**2 is the canonical functional; the metric
    form sup_h + l2_v is derived from it.
    """

    sup_h: float
    l2_v: float

    @property
    def squared(self) -> float:
        return self.sup_h**2 + self.l2_v**2

    @property
    def metric(self) -> float:
        return self.sup_h + self.l2_v


def sine_field(grid: SpatialGrid, k: int = 1, amplitude: float = 1.0) -> np.ndarray:
    """amplitude * sin(k pi x) sampled at the interior nodes."""
    return amplitude * np.sin(k * math.pi * grid.nodes)


def _check_field(u: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.m,):
        raise ValueError(f"field shape {u.shape} does not match grid ({grid.m},)")
    return u


def h_norm(u: np.ndarray, grid: SpatialGrid) -> float:
    """Discrete L^2([0,1]) norm: (dx * sum u_i^2)^(1/2)."""
    u = _check_field(u, grid)
    return math.sqrt(grid.dx * float(np.dot(u, u)))


def v_norm(u: np.ndarray, grid: SpatialGrid) -> float:
    """Discrete H^1_0 norm: (sum of (u_{i+1}-u_i)^2 / dx)^(1/2) with ghost zeros."""
    u = _check_field(u, grid)
    jumps = np.diff(u, prepend=0.0, append=0.0)
    return math.sqrt(float(np.dot(jumps, jumps)) / grid.dx)


def sup_norm(u: np.ndarray) -> float:
    return float(np.max(np.abs(u))) if u.size else 0.0


def _check_path(p: np.ndarray, grid: SpatialGrid, mesh: TimeMesh) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (mesh.steps + 1, grid.m):
        raise ValueError(
            f"path shape {p.shape} does not match (steps+1, m) = "
            f"({mesh.steps + 1}, {grid.m})"
        )
    return p


def _h_norms_sq(p: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return grid.dx * np.einsum("km,km->k", p, p)


def _v_norms_sq(p: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    jumps = np.diff(p, axis=1, prepend=0.0, append=0.0)
    return np.einsum("km,km->k", jumps, jumps) / grid.dx


def path_distance(
    p: np.ndarray, q: np.ndarray, grid: SpatialGrid, mesh: TimeMesh
) -> PathDistance:
    """C([0,T],H) ∩ L^2([0,T],V) distance between two paths on a common mesh.

    sup_h = max_k |p_k - q_k|_H; l2_v^2 = sum_{k<steps} ||p_k - q_k||_V^2 dt
    (left-endpoint rule, consistent with the time stepping order).
    """
    p = _check_path(p, grid, mesh)
    q = _check_path(q, grid, mesh)
    diff = p - q
    sup_h = math.sqrt(float(np.max(_h_norms_sq(diff, grid))))
    vsq = _v_norms_sq(diff, grid)
    l2_v = math.sqrt(float(np.sum(vsq[:-1])) * mesh.dt)
    return PathDistance(sup_h=sup_h, l2_v=l2_v)


def sample_noise(seed: int, mesh: TimeMesh, d: int, path_index: int = 0) -> NoisePath:
    """Draw one Brownian increment array, deterministic in (seed, path_index).

    Uses the Philox counter-based generator keyed through a spawned
    SeedSequence, so (master seed, path index) fully determines every
    (step, channel) increment regardless of how paths are scheduled.
    """
    if d < 1:
        raise ValueError(f"need at least one noise channel, got d={d}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))
    rng = np.random.Generator(np.random.Philox(ss))
    increments = rng.standard_normal((mesh.steps, d)) * math.sqrt(mesh.dt)
    return NoisePath(mesh=mesh, d=d, increments=increments, seed=seed, path_index=path_index)


def exp_weighted_sup(
    p: np.ndarray,
    q: np.ndarray,
    vsq_p: np.ndarray,
    vsq_q: np.ndarray,
    alpha: float,
    grid: SpatialGrid,
    mesh: TimeMesh,
) -> tuple[float, float]:
    """Exponentially weighted sup-H^2 and time-integrated V^2 of p - q.

    The weight at t_k is exp{-alpha * sum_{m<k} (1 + ||p_m||_V^2 + ||q_m||_V^2) dt},
    the running energy of both paths; it tames the quadratic convection term
    so the weighted distance contracts.  vsq_p / vsq_q are the cached squared
    V norms of each path at the mesh nodes.

    Returns (sup_k weight_k |p_k - q_k|_H^2, sum_{k<steps} weight_k ||p_k - q_k||_V^2 dt).
    """
    if alpha <= 0.0:
        raise ValueError(f"weight exponent must be positive, got alpha={alpha}")
    p = _check_path(p, grid, mesh)
    q = _check_path(q, grid, mesh)
    vsq_p = np.asarray(vsq_p, dtype=float)
    vsq_q = np.asarray(vsq_q, dtype=float)
    if vsq_p.shape != (mesh.steps + 1,) or vsq_q.shape != (mesh.steps + 1,):
        raise ValueError("cached V norms must have one entry per time node")

    growth = 1.0 + vsq_p + vsq_q
    # log weight at t_k accumulates the first k left-endpoint terms
    log_w = np.zeros(mesh.steps + 1)
    log_w[1:] = -alpha * mesh.dt * np.cumsum(growth[:-1])
    weights = np.exp(log_w)

    diff = p - q
    weighted_sup = float(np.max(weights * _h_norms_sq(diff, grid)))
    vsq_diff = _v_norms_sq(diff, grid)
    weighted_int = float(np.sum(weights[:-1] * vsq_diff[:-1]) * mesh.dt)
    return weighted_sup, weighted_int
