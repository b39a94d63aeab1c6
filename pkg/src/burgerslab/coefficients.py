"""Coefficient sets for the Burgers-type dynamics, averaging and audits.

A coefficient set bundles the convection antiderivative g(t, z), its
z-derivative, the reaction f(t, x, z) and the d noise amplitudes
sigma(t, x, z).  All callables must be numpy-vectorized: scalar or array
arguments broadcast, g/f return the broadcast shape, sigma returns
(d,) + broadcast shape.

Builtin families:
  * make_burgers_set    - g = a_g z^2/2 plus a bounded reaction/noise profile
  * make_multiscale_set - a time-decaying perturbation of averaged callbacks,
    engineered so the time-average of the squared deviation vanishes like
    a known kappa(t_hat)

Averaging is a Cesaro mean (1/T) ∫_0^T · ds computed by composite Simpson
on geometrically graded panels (the builtin perturbations decay like a
power of 1+s, which a uniform rule resolves poorly at large horizons).

Audits sample user-declared boxes and report the smallest admissible
constants for the growth/monotonicity/Lipschitz assumptions the
well-posedness theory needs; they are evidence, not proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CoefficientSet",
    "AveragedCoefficientSet",
    "AuditReport",
    "SampleBox",
    "make_burgers_set",
    "make_multiscale_set",
    "burgers_multiscale_family",
    "average_coefficients",
    "estimate_kappa",
    "audit_assumptions",
    "time_average",
]

NOISE_PROFILES = ("additive", "bounded", "zero")


def _expand(out: np.ndarray, *args) -> np.ndarray:
    """Give out the full broadcast shape of args (read-only view if needed)."""
    shape = np.broadcast_shapes(*(np.shape(a) for a in args))
    out = np.asarray(out, dtype=float)
    return out if out.shape == shape else np.broadcast_to(out, shape)


def _zero_g(t, z):
    return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(z)))


def _spot_check_derivative(g, dg_dz) -> None:
    # cheap guard that dg_dz matches g; loose tolerance, smooth g assumed
    h = 1e-5
    for t in (0.1, 1.7):
        for z in (-2.3, -0.7, 0.4, 1.9):
            fd = (float(g(t, z + h)) - float(g(t, z - h))) / (2.0 * h)
            an = float(dg_dz(t, z))
            if abs(fd - an) > 5e-3 * max(1.0, abs(an)):
                raise ValueError(
                    f"dg_dz disagrees with finite differences at (t={t}, z={z}): "
                    f"analytic {an}, fd {fd}"
                )


@dataclass(frozen=True)
class CoefficientSet:
    """Evaluable coefficients (g, dg_dz, f, sigma) with d noise channels."""

    g: Callable[..., np.ndarray]
    dg_dz: Callable[..., np.ndarray]
    f: Callable[..., np.ndarray]
    sigma: Callable[..., np.ndarray]
    d: int
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"need at least one noise channel, got d={self.d}")
        _spot_check_derivative(self.g, self.dg_dz)


@dataclass(frozen=True)
class AveragedCoefficientSet:
    """Time-averaged reaction/noise callbacks f_bar(x, z), sigma_bar(x, z)."""

    f_bar: Callable[..., np.ndarray]
    sigma_bar: Callable[..., np.ndarray]
    d: int
    source: CoefficientSet | None = None
    t_hat_used: float = math.inf

    def __post_init__(self) -> None:
        if self.source is not None and self.source.d != self.d:
            raise ValueError(
                f"channel count {self.d} does not match source set d={self.source.d}"
            )


def make_burgers_set(
    a_g: float,
    noise_profile: str = "additive",
    c1: float = 0.0,
    c2: float = 0.0,
    sigma_amp: float = 1.0,
    d: int = 1,
    name: str | None = None,
) -> CoefficientSet:
    """Burgers-type set: g = a_g z^2/2, bounded reaction, profile noise.

    f(t, x, z) = c1 * z / (1 + z^2) + c2 is bounded with one-sided slope
    bounded by |c1|.  Noise profiles (identical across channels):
      additive - sigma_j = sigma_amp
      bounded  - sigma_j = sigma_amp * (0.5 + z / (1 + z^2)), Lipschitz in z
      zero     - sigma_j = 0 (deterministic dynamics)
    """
    if noise_profile not in NOISE_PROFILES:
        raise ValueError(f"unknown noise profile {noise_profile!r}; use one of {NOISE_PROFILES}")

    def g(t, z):
        z = np.asarray(z, dtype=float)
        return _expand(0.5 * a_g * z * z, t, z)

    def dg_dz(t, z):
        z = np.asarray(z, dtype=float)
        return _expand(a_g * z, t, z)

    def f(t, x, z):
        z = np.asarray(z, dtype=float)
        return _expand(c1 * z / (1.0 + z * z) + c2, t, x, z)

    if noise_profile == "additive":

        def channel(t, x, z):
            return np.full(np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(z)), sigma_amp)

    elif noise_profile == "bounded":

        def channel(t, x, z):
            z = np.asarray(z, dtype=float)
            return _expand(sigma_amp * (0.5 + z / (1.0 + z * z)), t, x, z)

    else:

        def channel(t, x, z):
            return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(z)))

    def sigma(t, x, z):
        row = channel(t, x, z)
        return np.broadcast_to(row, (d,) + row.shape)

    label = name or f"burgers(a_g={a_g}, f={c1}*z/(1+z^2)+{c2}, sigma={noise_profile})"
    return CoefficientSet(g=g, dg_dz=dg_dz, f=f, sigma=sigma, d=d, name=label)


def make_multiscale_set(
    f_bar: Callable[..., np.ndarray],
    sigma_bar: Callable[..., np.ndarray],
    d: int,
    beta: float,
    amplitude: float,
    g: Callable[..., np.ndarray] | None = None,
    dg_dz: Callable[..., np.ndarray] | None = None,
    bump: Callable[..., np.ndarray] | None = None,
    name: str = "multiscale",
) -> CoefficientSet:
    """Decaying perturbation of averaged callbacks.

    f(s, x, z) = f_bar(x, z) + amplitude * bump(x, z) * (1 + s)^(-beta) and
    each sigma channel picks up (amplitude/sqrt(d)) * bump * (1 + s)^(-beta),
    so the time-average of |f - f_bar|^2 + sum_j |sigma_j - sigma_bar_j|^2
    equals 2 * amplitude^2 * bump^2 * (1/T) ∫ (1+s)^(-2 beta) ds, which
    vanishes as the horizon grows (logarithmically for beta = 1/2).
    bump defaults to 1.  Periodic perturbations are deliberately not offered:
    their squared deviation does not average out.
    """
    if beta <= 0.0:
        raise ValueError(f"decay exponent must be positive, got beta={beta}")
    if bump is None:
        bump = lambda x, z: np.ones(np.broadcast_shapes(np.shape(x), np.shape(z)))
    if g is None:
        g = _zero_g
        dg_dz = _zero_g
    per_channel = amplitude / math.sqrt(d)

    def f(t, x, z):
        decay = (1.0 + np.asarray(t, dtype=float)) ** (-beta)
        return f_bar(x, z) + amplitude * bump(x, z) * decay

    def sigma(t, x, z):
        decay = (1.0 + np.asarray(t, dtype=float)) ** (-beta)
        pert = per_channel * bump(x, z) * decay
        return sigma_bar(x, z) + pert[None, ...]

    return CoefficientSet(g=g, dg_dz=dg_dz, f=f, sigma=sigma, d=d, name=name)


def burgers_multiscale_family(
    beta: float,
    amplitude: float,
    a_g: float = 0.0,
    noise_profile: str = "additive",
    c1: float = 0.0,
    c2: float = 0.0,
    sigma_amp: float = 1.0,
    d: int = 1,
) -> tuple[CoefficientSet, AveragedCoefficientSet]:
    """Builtin multiscale family: a Burgers set perturbed by (1+s)^(-beta).

    Returns the fast set together with its exact averaged counterpart (the
    unperturbed profile), ready for coupled averaging experiments.
    """
    base = make_burgers_set(
        a_g, noise_profile=noise_profile, c1=c1, c2=c2, sigma_amp=sigma_amp, d=d
    )
    f_bar = lambda x, z: base.f(0.0, x, z)
    sigma_bar = lambda x, z: base.sigma(0.0, x, z)
    ms = make_multiscale_set(
        f_bar,
        sigma_bar,
        d,
        beta,
        amplitude,
        g=base.g,
        dg_dz=base.dg_dz,
        name=f"multiscale(beta={beta}, amp={amplitude}, base={base.name})",
    )
    avg = AveragedCoefficientSet(f_bar=f_bar, sigma_bar=sigma_bar, d=d, source=ms)
    return ms, avg


def _graded_simpson(t_hat: float, per_panel: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Simpson nodes/weights on panels [0,1], [1,2], [2,4], ... up to t_hat."""
    if per_panel % 2 != 0:
        raise ValueError("per_panel must be even for Simpson's rule")
    edges = [0.0, min(1.0, t_hat)]
    while edges[-1] < t_hat:
        edges.append(min(2.0 * edges[-1], t_hat))
    nodes, weights = [], []
    for left, right in zip(edges[:-1], edges[1:]):
        h = (right - left) / per_panel
        xs = left + h * np.arange(per_panel + 1)
        ws = np.full(per_panel + 1, 2.0)
        ws[1::2] = 4.0
        ws[0] = ws[-1] = 1.0
        nodes.append(xs)
        weights.append(ws * h / 3.0)
    return np.concatenate(nodes), np.concatenate(weights)


def time_average(
    func_of_s: Callable[[float], np.ndarray], t_hat: float, per_panel: int = 16
) -> np.ndarray:
    """(1/t_hat) ∫_0^t_hat func(s) ds by graded composite Simpson."""
    if t_hat <= 0.0:
        raise ValueError(f"averaging horizon must be positive, got {t_hat}")
    nodes, weights = _graded_simpson(t_hat, per_panel)
    acc = weights[0] * np.asarray(func_of_s(float(nodes[0])), dtype=float)
    for s, w in zip(nodes[1:], weights[1:]):
        acc = acc + w * np.asarray(func_of_s(float(s)), dtype=float)
    return acc / t_hat


def average_coefficients(
    cs: CoefficientSet, t_hat: float, per_panel: int = 16
) -> AveragedCoefficientSet:
    """Cesaro-average the reaction and noise over [0, t_hat].

    The returned callbacks evaluate the quadrature lazily per call; exact on
    time-constant inputs (Simpson integrates constants exactly).
    """
    if t_hat <= 0.0:
        raise ValueError(f"averaging horizon must be positive, got {t_hat}")

    def f_bar(x, z):
        return time_average(lambda s: cs.f(s, x, z), t_hat, per_panel)

    def sigma_bar(x, z):
        return time_average(lambda s: cs.sigma(s, x, z), t_hat, per_panel)

    return AveragedCoefficientSet(
        f_bar=f_bar, sigma_bar=sigma_bar, d=cs.d, source=cs, t_hat_used=t_hat
    )


def estimate_kappa(
    cs: CoefficientSet,
    avg: AveragedCoefficientSet,
    t_hat_list: Sequence[float],
    z_samples: Sequence[float],
    x_samples: Sequence[float],
    per_panel: int = 16,
) -> list[tuple[float, float]]:
    """Decay modulus of the averaged approximation.

    kappa_hat(t_hat) = max over sampled (x, z) of
    [(1/t_hat) ∫_0^t_hat |f - f_bar|^2 + sum_j |sigma_j - sigma_bar_j|^2 ds]
    / (1 + z^2).  Invariant under relabeling of noise channels (the channel
    deviations enter through their sum).
    """
    t_hats = list(t_hat_list)
    if any(b <= a for a, b in zip(t_hats, t_hats[1:])):
        raise ValueError("t_hat_list must be strictly increasing")
    if len(z_samples) == 0 or len(x_samples) == 0:
        raise ValueError("sample sets must be nonempty")
    xg, zg = np.meshgrid(np.asarray(x_samples, float), np.asarray(z_samples, float))
    x, z = xg.ravel(), zg.ravel()
    fb = avg.f_bar(x, z)
    sb = avg.sigma_bar(x, z)

    def sq_dev(s: float) -> np.ndarray:
        df = cs.f(s, x, z) - fb
        ds = cs.sigma(s, x, z) - sb
        return df * df + np.sum(ds * ds, axis=0)

    out = []
    for t_hat in t_hats:
        mean_dev = time_average(sq_dev, t_hat, per_panel)
        kappa_hat = float(np.max(mean_dev / (1.0 + z * z)))
        out.append((t_hat, kappa_hat))
    return out


@dataclass(frozen=True)
class SampleBox:
    """Axis-aligned sampling box for coefficient audits."""

    t: tuple[float, float] = (0.0, 1.0)
    x: tuple[float, float] = (0.0, 1.0)
    z: tuple[float, float] = (-5.0, 5.0)

    def __post_init__(self) -> None:
        for axis in ("t", "x", "z"):
            lo, hi = getattr(self, axis)
            if not lo < hi:
                raise ValueError(f"box axis {axis} is empty: ({lo}, {hi})")


@dataclass(frozen=True)
class AuditReport:
    """Sampled assumption constants and any flagged witnesses.

    l_f_monotone_hat is clamped at 0: the one-sided Lipschitz bound holds
    with any nonnegative constant once the sampled ratio is nonpositive.
    A violation records (assumption, witness point) whenever a ratio is
    non-finite or exceeds the cap, a symptom of super-linear growth.
    """

    l_g_hat: float
    l_f_monotone_hat: float
    l_f_growth_hat: float
    l_sigma_hat: float
    violations: list[tuple[str, tuple]] = field(default_factory=list)
    n_samples: int = 0


def _flag(
    name: str,
    ratios: np.ndarray,
    witness: tuple[np.ndarray, ...],
    cap: float,
    violations: list[tuple[str, tuple]],
) -> None:
    bad = ~np.isfinite(ratios) | (ratios > cap)
    if np.any(bad):
        finite = np.where(np.isfinite(ratios), ratios, np.inf)
        idx = int(np.argmax(finite))
        violations.append((name, tuple(float(w[idx]) for w in witness)))


def audit_assumptions(
    cs: CoefficientSet,
    box: SampleBox,
    n_samples: int = 4000,
    seed: int = 0,
    ratio_cap: float = 1e6,
) -> AuditReport:
    """Monte Carlo audit of the growth/monotonicity assumptions on a box.

    Reports the sampled maxima of
      |dg/dz| / (1+|z|),
      (z-z')(f(z)-f(z')) / |z-z'|^2   (clamped at 0),
      |f|^2 / (1+|z|^2),
      and the larger of the two sigma ratios (Lipschitz and growth).
    Report-only: a bad coefficient yields violations, never an exception.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(*box.t, size=n_samples)
    x = rng.uniform(*box.x, size=n_samples)
    z = rng.uniform(*box.z, size=n_samples)
    z2 = rng.uniform(*box.z, size=n_samples)
    # keep the pair separated so the difference quotients are well scaled
    tiny = 1e-9 * (box.z[1] - box.z[0])
    z2 = np.where(np.abs(z - z2) < tiny, z2 + 2 * tiny, z2)

    violations: list[tuple[str, tuple]] = []

    with np.errstate(all="ignore"):
        r_g = np.abs(cs.dg_dz(t, z)) / (1.0 + np.abs(z))
        _flag("H_g growth", r_g, (t, z), ratio_cap, violations)

        fz, fz2 = cs.f(t, x, z), cs.f(t, x, z2)
        r_mono = (z - z2) * (fz - fz2) / (z - z2) ** 2
        _flag("H_f one-sided Lipschitz", r_mono, (t, x, z, z2), ratio_cap, violations)

        r_growth = fz * fz / (1.0 + z * z)
        _flag("H_f growth", r_growth, (t, x, z), ratio_cap, violations)

        sz, sz2 = cs.sigma(t, x, z), cs.sigma(t, x, z2)
        r_slip = np.sum((sz - sz2) ** 2, axis=0) / (z - z2) ** 2
        r_sgrow = np.sum(sz * sz, axis=0) / (1.0 + z * z)
        _flag("H_sigma Lipschitz", r_slip, (t, x, z, z2), ratio_cap, violations)
        _flag("H_sigma growth", r_sgrow, (t, x, z), ratio_cap, violations)

    def finite_max(r: np.ndarray) -> float:
        r = r[np.isfinite(r)]
        return float(np.max(r)) if r.size else math.inf

    return AuditReport(
        l_g_hat=finite_max(r_g),
        l_f_monotone_hat=max(0.0, finite_max(r_mono)),
        l_f_growth_hat=finite_max(r_growth),
        l_sigma_hat=max(finite_max(r_slip), finite_max(r_sgrow)),
        violations=violations,
        n_samples=n_samples,
    )
