"""Rate-function evaluation by penalized control optimization.

The rate of a target path is the least control energy 1/2 ∫ |h|^2 dt over
all controls steering the deterministic skeleton onto the target.  The
hard constraint is relaxed to

    J_mu(h) = energy(h) + mu * squared_path_distance(skeleton(h), target)

minimized over piecewise-constant controls by gradient descent with
central finite-difference gradients and backtracking, under a geometric
continuation schedule in mu.  An empty or unreachable constraint set shows
up as a residual floor and converged=False rather than an exception: the
infimum over an empty set is infinite, and the report says so.

Gradients are finite differences rather than an adjoint solve on purpose:
the control dimension stays small (blocks * d) and the projection step of
the reflected dynamics is not differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SpatialGrid, TimeMesh, path_distance
from .coefficients import CoefficientSet
from .solver import Control, ReflectedPath, SchemeConfig, solve_skeleton

__all__ = [
    "RateOptions",
    "RateFunctionResult",
    "LevelSetSample",
    "rate_function",
    "sample_level_set",
    "level_set_continuity_probe",
]


@dataclass(frozen=True)
class RateOptions:
    """Optimizer knobs: block count, continuation schedule, stopping rules."""

    blocks: int = 8
    mu_schedule: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
    step_size: float = 1.0
    max_iters: int = 40
    tol: float = 1e-3
    fd_step: float = 1e-4

    def __post_init__(self) -> None:
        if self.blocks < 1:
            raise ValueError("need at least one control block")
        if any(m <= 0 for m in self.mu_schedule):
            raise ValueError("penalty weights must be positive")
        if self.tol <= 0 or self.step_size <= 0 or self.fd_step <= 0:
            raise ValueError("tol, step_size and fd_step must be positive")


@dataclass(frozen=True)
class RateFunctionResult:
    """Outcome of one rate-function optimization.

    lambda_hat is exactly the energy of h_star; residual is the squared
    path distance from the steered skeleton to the target; history holds
    (mu, J, residual) for every accepted iterate, per continuation stage.
    """

    lambda_hat: float
    h_star: Control
    residual: float
    iterations: int
    converged: bool
    history: list[tuple[float, float, float]] = field(default_factory=list)


def _check_target(target: np.ndarray, grid: SpatialGrid, mesh: TimeMesh) -> np.ndarray:
    target = np.asarray(target, dtype=float)
    if target.shape != (mesh.steps + 1, grid.m):
        raise ValueError(
            f"target shape {target.shape} does not match (steps+1, m) = "
            f"({mesh.steps + 1}, {grid.m})"
        )
    return target


def rate_function(
    cs: CoefficientSet,
    u0: np.ndarray,
    target: np.ndarray,
    cfg: SchemeConfig,
    opt: RateOptions = RateOptions(),
) -> RateFunctionResult:
    """Least control energy steering the skeleton to a target path."""
    target = _check_target(target, cfg.grid, cfg.mesh)
    t_final = cfg.mesh.t_final
    d = cs.d
    block_dt = t_final / opt.blocks

    def residual_of(h_flat: np.ndarray) -> float:
        ctrl = Control(t_final, h_flat.reshape(opt.blocks, d))
        path = solve_skeleton(cs, u0, ctrl, cfg)
        return path_distance(path.u, target, cfg.grid, cfg.mesh).squared

    def objective(h_flat: np.ndarray, mu: float) -> tuple[float, float]:
        res = residual_of(h_flat)
        energy = 0.5 * float(np.dot(h_flat, h_flat)) * block_dt
        return energy + mu * res, res

    h = np.zeros(opt.blocks * d)
    history: list[tuple[float, float, float]] = []
    iterations = 0

    for mu in opt.mu_schedule:
        j_cur, res_cur = objective(h, mu)
        history.append((mu, j_cur, res_cur))
        alpha0 = opt.step_size
        for _ in range(opt.max_iters):
            grad = np.empty_like(h)
            for k in range(h.size):
                width = opt.fd_step * max(1.0, abs(h[k]))
                bump = np.zeros_like(h)
                bump[k] = width
                j_plus, _ = objective(h + bump, mu)
                j_minus, _ = objective(h - bump, mu)
                grad[k] = (j_plus - j_minus) / (2.0 * width)
            gnorm_sq = float(np.dot(grad, grad))
            if gnorm_sq < 1e-18:
                break
            alpha = alpha0
            accepted = False
            while alpha > 1e-12:
                trial = h - alpha * grad
                j_new, res_new = objective(trial, mu)
                if j_new <= j_cur - 1e-4 * alpha * gnorm_sq:
                    h, j_cur, res_cur = trial, j_new, res_new
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            # warm-start the next backtracking from just above the accepted step
            alpha0 = min(opt.step_size, 2.0 * alpha)
            iterations += 1
            history.append((mu, j_cur, res_cur))

    residual = residual_of(h)
    h_star = Control(t_final, h.reshape(opt.blocks, d))
    return RateFunctionResult(
        lambda_hat=h_star.energy,
        h_star=h_star,
        residual=residual,
        iterations=iterations,
        converged=residual <= opt.tol,
        history=history,
    )


@dataclass(frozen=True)
class LevelSetSample:
    """Sampled members of the energy level set {rate <= bound}."""

    bound: float
    members: list[tuple[Control, ReflectedPath]]

    def __post_init__(self) -> None:
        for ctrl, _ in self.members:
            if ctrl.energy > self.bound + 1e-9:
                raise ValueError(
                    f"member control energy {ctrl.energy:.6g} exceeds bound {self.bound}"
                )


def _draw_controls(
    rng: np.random.Generator, bound: float, count: int, t_final: float, blocks: int, d: int
) -> list[Control]:
    controls = []
    block_dt = t_final / blocks
    for _ in range(count):
        raw = rng.standard_normal((blocks, d))
        raw_energy = 0.5 * float(np.sum(raw**2)) * block_dt
        target_energy = rng.uniform(0.0, bound) if bound > 0 else 0.0
        scale = math.sqrt(target_energy / raw_energy) if raw_energy > 0 else 0.0
        controls.append(Control(t_final, raw * scale))
    return controls


def sample_level_set(
    cs: CoefficientSet,
    u0: np.ndarray,
    bound: float,
    count: int,
    seed: int,
    cfg: SchemeConfig,
    blocks: int = 8,
) -> LevelSetSample:
    """Random skeleton paths with control energy uniform in [0, bound]."""
    if bound < 0:
        raise ValueError(f"level-set bound must be nonnegative, got {bound}")
    if count < 1:
        raise ValueError(f"need at least one member, got count={count}")
    rng = np.random.default_rng(seed)
    controls = _draw_controls(rng, bound, count, cfg.mesh.t_final, blocks, cs.d)
    members = [(ctrl, solve_skeleton(cs, u0, ctrl, cfg)) for ctrl in controls]
    return LevelSetSample(bound=bound, members=members)


def level_set_continuity_probe(
    cs: CoefficientSet,
    u0: np.ndarray,
    u0_sequence: list[np.ndarray],
    bound: float,
    count: int,
    seed: int,
    cfg: SchemeConfig,
    blocks: int = 8,
) -> list[float]:
    """One-sided Hausdorff estimates between sampled level sets.

    For each perturbed start the same control sample is solved from both
    initial conditions (the coupling device behind the Hausdorff-continuity
    argument), and the estimate is the larger of the two one-sided
    sup-min squared distances between the sampled sets.
    """
    if not u0_sequence:
        raise ValueError("u0_sequence must be nonempty")
    rng = np.random.default_rng(seed)
    controls = _draw_controls(rng, bound, count, cfg.mesh.t_final, blocks, cs.d)
    ref_paths = [solve_skeleton(cs, u0, ctrl, cfg).u for ctrl in controls]

    estimates = []
    for u0_n in u0_sequence:
        per_paths = [solve_skeleton(cs, u0_n, ctrl, cfg).u for ctrl in controls]
        dists = np.empty((count, count))
        for i, p in enumerate(ref_paths):
            for j, q in enumerate(per_paths):
                dists[i, j] = path_distance(p, q, cfg.grid, cfg.mesh).squared
        forward = float(np.max(np.min(dists, axis=1)))
        backward = float(np.max(np.min(dists, axis=0)))
        estimates.append(max(forward, backward))
    return estimates
