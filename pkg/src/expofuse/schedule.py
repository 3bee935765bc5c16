"""Noise schedules and deterministic (DDIM-style) iterative refinement.

Coefficients follow the variance-preserving convention
``alpha_t = sqrt(abar_t)``, ``beta_t = sqrt(1 - abar_t)`` where ``abar`` is the
cumulative signal level of the schedule.  Noised features are plain float
arrays and are never clamped; clamping would break the exact inversion
between :func:`add_noise` and :func:`predict_noise`.

Two update rules are offered by :func:`ddim_step`:

``mode="ddim"`` (default)
    ``noise = (mask - alpha_now * x) / beta_now``;
    ``mask' = alpha_next * x + beta_next * noise``.  With a perfect denoiser
    the loop lands exactly on the clean plane for any number of steps.
``mode="literal"``
    The printed variant where the two coefficient pairs swap roles:
    ``noise = (mask - beta_now * x) / alpha_now``;
    ``mask' = alpha_next * noise + beta_next * x``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

FINAL = -1  # t_next sentinel: the noiseless terminal level
LINEAR_BETA = (1e-4, 0.02)
COSINE_OFFSET = 0.008
COSINE_MAX_BETA = 0.999


class ScheduleKind(str, enum.Enum):
    LINEAR = "linear"
    COSINE = "cosine"


@dataclass(frozen=True)
class NoiseSchedule:
    kind: ScheduleKind
    alpha_bar: np.ndarray  # cumulative signal level per step, non-increasing

    @property
    def T(self) -> int:
        return len(self.alpha_bar)


@dataclass(frozen=True)
class StepCoeffs:
    alpha_now: float
    beta_now: float
    alpha_next: float
    beta_next: float


Denoiser = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


def make_schedule(T: int = 1000, kind="linear") -> NoiseSchedule:
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    T = int(T)
    kind = ScheduleKind(kind)
    if kind is ScheduleKind.LINEAR:
        betas = np.linspace(LINEAR_BETA[0], LINEAR_BETA[1], T)
    else:
        s = COSINE_OFFSET
        t = np.arange(T + 1, dtype=np.float64) / T
        f = np.cos((t + s) / (1 + s) * math.pi / 2) ** 2
        betas = np.minimum(1.0 - f[1:] / f[:-1], COSINE_MAX_BETA)
    return NoiseSchedule(kind, np.cumprod(1.0 - betas))


def _level(t: int, sched: NoiseSchedule) -> tuple[float, float]:
    if t == FINAL:
        return 1.0, 0.0
    ab = float(sched.alpha_bar[t])
    return math.sqrt(ab), math.sqrt(1.0 - ab)


def cal(t_now: int, t_next: int, sched: NoiseSchedule) -> StepCoeffs:
    """Coefficients for the current and next levels (``t_next=-1`` is terminal)."""
    if not (FINAL <= t_next < t_now < sched.T):
        raise ValueError(f"need -1 <= t_next < t_now < T={sched.T}, got t_now={t_now}, t_next={t_next}")
    a0, b0 = _level(int(t_now), sched)
    a1, b1 = _level(int(t_next), sched)
    return StepCoeffs(a0, b0, a1, b1)


def _same_shape(a, b, what="planes"):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch between {what}: {a.shape} vs {b.shape}")
    return a, b


def add_noise(clean, eps, coeffs) -> np.ndarray:
    """``alpha * clean + beta * eps`` without clamping.

    ``coeffs`` is a :class:`StepCoeffs` (its current-level pair is used) or
    a plain ``(alpha, beta)`` tuple.
    """
    clean, eps = _same_shape(clean, eps, "clean plane and noise")
    if isinstance(coeffs, StepCoeffs):
        alpha, beta = coeffs.alpha_now, coeffs.beta_now
    else:
        alpha, beta = coeffs
    return alpha * clean + beta * eps


def predict_noise(mask, decoded, coeffs: StepCoeffs, mode: str = "ddim") -> np.ndarray:
    mask, decoded = _same_shape(mask, decoded, "noisy plane and decoded plane")
    if mode == "ddim":
        if coeffs.beta_now == 0:
            raise ZeroDivisionError("singular step: beta_now = 0")
        return (mask - coeffs.alpha_now * decoded) / coeffs.beta_now
    if mode == "literal":
        if coeffs.alpha_now == 0:
            raise ZeroDivisionError("singular step: alpha_now = 0")
        return (mask - coeffs.beta_now * decoded) / coeffs.alpha_now
    raise ValueError(f"mode must be 'ddim' or 'literal', got {mode!r}")


def ddim_step(mask, decoded, coeffs: StepCoeffs, mode: str = "ddim") -> np.ndarray:
    """Estimate the noise from the current prediction, then re-noise one level down."""
    noise = predict_noise(mask, decoded, coeffs, mode)
    decoded = np.asarray(decoded, dtype=np.float64)
    if mode == "ddim":
        return coeffs.alpha_next * decoded + coeffs.beta_next * noise
    return coeffs.alpha_next * noise + coeffs.beta_next * decoded


def step_pairs(T: int, n: int) -> list[tuple[int, int]]:
    """``n`` evenly spaced levels from ``T-1`` down to 0, as (t_now, t_next) pairs."""
    if n < 1 or n > T:
        raise ValueError(f"need 1 <= steps <= T={T}, got {n}")
    ts = np.round(np.linspace(T - 1, 0, n)).astype(int).tolist()
    return list(zip(ts, ts[1:] + [FINAL]))


def _check_steps(steps, T):
    if not steps:
        raise ValueError("empty step list")
    for i, (now, nxt) in enumerate(steps):
        if not (FINAL <= nxt < now < T):
            raise ValueError(f"step {i}: need -1 <= t_next < t_now < T, got ({now}, {nxt})")
        if i + 1 < len(steps) and steps[i + 1][0] != nxt:
            raise ValueError(f"step {i + 1} does not start at {nxt}")
    if steps[-1][1] != FINAL:
        raise ValueError("the last step must end at the terminal sentinel -1")


def sample_loop(condition, denoiser: Denoiser, steps, seed: int, sched: NoiseSchedule | None = None,
                mode: str = "ddim", trajectory: list | None = None) -> np.ndarray:
    """Refine from seeded standard-normal noise; return the last decoded plane in [0, 1].

    ``denoiser(mask, condition, t_now)`` must return a plane shaped like
    ``mask``.  When ``trajectory`` is a list, each updated mask is appended.
    """
    sched = sched or make_schedule()
    steps = [(int(a), int(b)) for a, b in steps]
    _check_steps(steps, sched.T)
    condition = np.asarray(condition, dtype=np.float64)
    rng = np.random.default_rng(seed)
    mask = rng.standard_normal(condition.shape)
    decoded = None
    for t_now, t_next in steps:
        coeffs = cal(t_now, t_next, sched)
        decoded = np.asarray(denoiser(mask, condition, t_now), dtype=np.float64)
        if decoded.shape != mask.shape:
            raise ValueError(f"denoiser returned shape {decoded.shape} at t={t_now}, expected {mask.shape}")
        mask = ddim_step(mask, decoded, coeffs, mode)
        if trajectory is not None:
            trajectory.append(mask)
    return np.clip(decoded, 0.0, 1.0)


def oracle_denoiser(target) -> Denoiser:
    """A perfect denoiser that always predicts ``target``."""
    target = np.asarray(target, dtype=np.float64)

    def predict(mask, condition, t):
        return target.copy()

    return predict
