"""Monte Carlo probes for the small-noise family.

All probabilities concern tube events {rho(u, target) < delta} (or their
complements) where rho is the canonical squared path functional
sup_t |u - target|_H^2 + ∫ ||u - target||_V^2 dt.

Two estimators are provided: the naive frequency, and an importance-sampled
version that simulates the controlled equation (drift shifted by sigma h)
and reweights with the discrete Girsanov density

    exp{ -(1/sqrt(eps)) sum_k h(t_k).dW_k - (1/(2 eps)) sum_k |h(t_k)|^2 dt },

built from the same Brownian increments that drove the path (left-point
evaluation), which makes the weight mean exactly one in expectation.

Per-path seeds derive from (seed, path index) through the splittable
generator, and the same indices are reused across epsilon values and
estimator variants: common random numbers keep trend comparisons clean and
every estimate bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import path_distance, sample_noise
from .coefficients import CoefficientSet
from .ratefn import RateFunctionResult
from .solver import Control, SchemeConfig, solve, solve_skeleton

__all__ = [
    "EventSpec",
    "RareEventEstimate",
    "FWBoundRow",
    "ConditionRow",
    "estimate_naive",
    "estimate_importance",
    "fw_lower_bound_probe",
    "condition_convergence_probe",
]

LOG_WEIGHT_CLIP = 700.0  # exp overflow threshold for float64


@dataclass(frozen=True)
class EventSpec:
    """Tube event around a target path.

    sense "hit" is {rho(u, target) < delta}, "miss" the complement, with
    rho the squared path functional.  delta = inf makes "hit" the sure
    event (useful for weight diagnostics).
    """

    target: np.ndarray
    delta: float
    sense: str = "hit"

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise ValueError(f"tube radius must be positive, got {self.delta}")
        if self.sense not in ("hit", "miss"):
            raise ValueError(f"sense must be 'hit' or 'miss', got {self.sense!r}")
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))

    def occurred(self, u: np.ndarray, cfg: SchemeConfig) -> bool:
        d2 = path_distance(u, self.target, cfg.grid, cfg.mesh).squared
        return d2 < self.delta if self.sense == "hit" else d2 >= self.delta


@dataclass(frozen=True)
class RareEventEstimate:
    """Estimate record. p_hat is clipped to [0, 1]; raw_mean is not.

    For the naive estimator the two coincide.  For importance sampling
    raw_mean is the unbiased weighted average (it can stray above 1 on a
    sure event), and n_clipped counts log-weights truncated at the float64
    overflow threshold.
    """

    p_hat: float
    std_err: float
    n_samples: int
    epsilon: float
    method: str
    seed: int
    raw_mean: float
    n_clipped: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_hat <= 1.0) or self.std_err < 0.0:
            raise ValueError("estimate out of range")


def estimate_naive(
    cs: CoefficientSet,
    u0: np.ndarray,
    eps: float,
    ev: EventSpec,
    n_samples: int,
    seed: int,
    cfg: SchemeConfig,
) -> RareEventEstimate:
    """Plain Monte Carlo frequency of the event at noise level eps."""
    if eps <= 0.0 or n_samples < 1:
        raise ValueError("need eps > 0 and at least one sample")
    run_cfg = replace(cfg, noise_scale=math.sqrt(eps))
    hits = np.empty(n_samples)
    for i in range(n_samples):
        noise = sample_noise(seed, cfg.mesh, cs.d, path_index=i)
        path = solve(cs, u0, noise, None, run_cfg)
        hits[i] = 1.0 if ev.occurred(path.u, cfg) else 0.0
    p = float(np.mean(hits))
    se = float(np.std(hits)) / math.sqrt(n_samples)
    return RareEventEstimate(
        p_hat=p, std_err=se, n_samples=n_samples, epsilon=eps,
        method="naive", seed=seed, raw_mean=p,
    )


def estimate_importance(
    cs: CoefficientSet,
    u0: np.ndarray,
    eps: float,
    ev: EventSpec,
    h_tilt: Control,
    n_samples: int,
    seed: int,
    cfg: SchemeConfig,
) -> RareEventEstimate:
    """Girsanov-tilted estimator, unbiased for the same event probability.

    Simulates the controlled equation (tilt folded in as drift sigma h at
    unit strength, noise at sqrt(eps)) and weights each indicator with the
    discrete exponential density evaluated on the simulating increments.
    With h_tilt = 0 this reduces bit-exactly to the naive estimator.
    """
    if eps <= 0.0 or n_samples < 1:
        raise ValueError("need eps > 0 and at least one sample")
    run_cfg = replace(cfg, noise_scale=math.sqrt(eps))
    h_path = h_tilt.on_mesh(cfg.mesh)
    h_l2_sq = float(np.sum(h_path**2)) * cfg.mesh.dt
    sqrt_eps = math.sqrt(eps)

    stats = np.empty(n_samples)
    n_clipped = 0
    for i in range(n_samples):
        noise = sample_noise(seed, cfg.mesh, cs.d, path_index=i)
        path = solve(cs, u0, noise, h_tilt, run_cfg)
        hit = ev.occurred(path.u, cfg)
        log_w = (
            -float(np.sum(h_path * noise.increments)) / sqrt_eps
            - h_l2_sq / (2.0 * eps)
        )
        if log_w > LOG_WEIGHT_CLIP:
            log_w = LOG_WEIGHT_CLIP
            n_clipped += 1
        stats[i] = math.exp(log_w) if hit else 0.0
    raw = float(np.mean(stats))
    se = float(np.std(stats)) / math.sqrt(n_samples)
    return RareEventEstimate(
        p_hat=min(1.0, max(0.0, raw)), std_err=se, n_samples=n_samples,
        epsilon=eps, method="importance", seed=seed, raw_mean=raw,
        n_clipped=n_clipped,
    )


@dataclass(frozen=True)
class FWBoundRow:
    """One row of the lower-bound probe: eps log p versus -(rate + theta).

    satisfied is None on zero-hit rows: the estimate is then only the
    95% one-sided upper bound 1 - 0.05^(1/N), so no violation conclusion
    can be drawn.
    """

    epsilon: float
    p_hat: float
    eps_log_p: float
    bound: float
    satisfied: bool | None
    zero_hit: bool
    method: str


def fw_lower_bound_probe(
    cs: CoefficientSet,
    u0: np.ndarray,
    target: np.ndarray,
    delta: float,
    eps_list: list[float],
    n_samples: int,
    seed: int,
    cfg: SchemeConfig,
    rate_result: RateFunctionResult,
    theta: float,
) -> list[FWBoundRow]:
    """Tube lower bound check: is eps log p_hat >= -(lambda_hat + theta)?

    Needs a converged rate estimate for the target; falls back to
    importance sampling with the minimizing control whenever the naive
    count is zero.
    """
    if not rate_result.converged:
        raise ValueError("rate estimate for the target did not converge")
    if theta <= 0.0:
        raise ValueError(f"slack theta must be positive, got {theta}")
    ev = EventSpec(target=target, delta=delta, sense="hit")
    bound = -(rate_result.lambda_hat + theta)

    rows = []
    for eps in eps_list:
        est = estimate_naive(cs, u0, eps, ev, n_samples, seed, cfg)
        method = "naive"
        if est.p_hat == 0.0:
            est = estimate_importance(
                cs, u0, eps, ev, rate_result.h_star, n_samples, seed, cfg
            )
            method = "importance"
        if est.p_hat > 0.0:
            eps_log_p = eps * math.log(est.p_hat)
            rows.append(FWBoundRow(
                epsilon=eps, p_hat=est.p_hat, eps_log_p=eps_log_p, bound=bound,
                satisfied=bool(eps_log_p >= bound), zero_hit=False, method=method,
            ))
        else:
            p_up = 1.0 - 0.05 ** (1.0 / n_samples)
            rows.append(FWBoundRow(
                epsilon=eps, p_hat=p_up, eps_log_p=eps * math.log(p_up), bound=bound,
                satisfied=None, zero_hit=True, method=method,
            ))
    return rows


@dataclass(frozen=True)
class ConditionRow:
    epsilon: float
    worst_fraction: float


def condition_convergence_probe(
    cs: CoefficientSet,
    u0_set: list[np.ndarray],
    controls: list[Control],
    eps_list: list[float],
    delta: float,
    n_samples: int,
    seed: int,
    cfg: SchemeConfig,
    energy_bound: float | None = None,
) -> list[ConditionRow]:
    """Uniform small-noise convergence of controlled paths to the skeleton.

    For every (start, control) pair the controlled equation and its
    skeleton share the control; the probe reports, per eps, the worst
    empirical fraction of paths whose squared distance to the skeleton
    meets delta.  Path indices are shared across eps values (common random
    numbers), so the reported trend is a coupled comparison.
    """
    if delta <= 0.0:
        raise ValueError(f"threshold delta must be positive, got {delta}")
    if energy_bound is not None:
        for ctrl in controls:
            if not ctrl.in_energy_class(energy_bound):
                raise ValueError(
                    f"control with ∫|h|^2 = {ctrl.l2_sq:.4g} exceeds bound {energy_bound}"
                )

    skeletons = [
        [solve_skeleton(cs, u0, ctrl, cfg).u for ctrl in controls] for u0 in u0_set
    ]
    rows = []
    for eps in eps_list:
        run_cfg = replace(cfg, noise_scale=math.sqrt(eps))
        worst = 0.0
        for iu, u0 in enumerate(u0_set):
            for ic, ctrl in enumerate(controls):
                base = skeletons[iu][ic]
                exceed = 0
                for i in range(n_samples):
                    noise = sample_noise(seed, cfg.mesh, cs.d, path_index=i)
                    path = solve(cs, u0, noise, ctrl, run_cfg)
                    d2 = path_distance(path.u, base, cfg.grid, cfg.mesh).squared
                    if d2 >= delta:
                        exceed += 1
                worst = max(worst, exceed / n_samples)
        rows.append(ConditionRow(epsilon=eps, worst_fraction=worst))
    return rows
