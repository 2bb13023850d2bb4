"""Monte-Carlo estimation of E[f(X_tau) | X_0 = x0] for diffusions.

Paths follow an Euler-Maruyama scheme.  Processes flagged as
state-constrained (the power-diffusion and square-root presets) apply full
truncation, meaning the diffusion coefficient sees max(x, 0), and absorb
paths at the origin: once a path touches zero it stays there.

Draws come from the counter-based Philox generator.  Paths are simulated
in fixed-size batches of 8192 and batch b is seeded from the entropy pair
(seed, b), so the estimate depends only on (seed, n_paths, n_steps) and is
reproducible across platforms and across any worker partitioning that
splits on batch boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DletError

BATCH_SIZE = 8192


@dataclass(frozen=True)
class SdeSpec:
    """Coefficients of dX = drift(t, X) dt + diffusion(t, X) dW.

    Parameters
    ----------
    drift, diffusion : callable
        Vectorized coefficient functions of (t, x).
    absorb_at_zero : bool
        When True, the diffusion argument is clipped at zero and paths
        that reach x <= 0 are frozen at 0 for the rest of the horizon.
    label : str
        Short name used in reports.
    """

    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    absorb_at_zero: bool = False
    label: str = "custom"


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of the payoff with its CLT error bar.

    ``std_error`` is the sample standard deviation (ddof=1) divided by
    sqrt(n_paths); zero when n_paths == 1 or tau == 0.
    """

    mean: float
    std_error: float
    n_paths: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "seed": self.seed,
        }


def cev_preset(r: float, sigma: float, lam: float) -> SdeSpec:
    """Power-diffusion process dX = r X dt + sigma X^lam dW.

    For lam in (0, 1] the origin is absorbing and paths are kept
    non-negative; lam = 0 gives an unconstrained arithmetic motion.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")

    def drift(t, x):
        return r * x

    if lam == 0.0:
        def diffusion(t, x):
            return np.full_like(x, sigma)
        absorb = False
    else:
        def diffusion(t, x):
            return sigma * np.power(np.maximum(x, 0.0), lam)
        absorb = True
    return SdeSpec(drift=drift, diffusion=diffusion, absorb_at_zero=absorb,
                   label=f"cev(r={r}, sigma={sigma}, lam={lam})")


def cir_preset(b: float, sigma: float) -> SdeSpec:
    """Zero-mean square-root process dX = -b X dt + sigma sqrt(X) dW."""
    if b <= 0.0:
        raise ValueError("b must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")

    def drift(t, x):
        return -b * x

    def diffusion(t, x):
        return sigma * np.sqrt(np.maximum(x, 0.0))

    return SdeSpec(drift=drift, diffusion=diffusion, absorb_at_zero=True,
                   label=f"cir(b={b}, sigma={sigma})")


def _simulate_batch(spec: SdeSpec, x0: float, tau: float, n_steps: int,
                    rng: np.random.Generator, size: int) -> np.ndarray:
    dt = tau / n_steps
    sqrt_dt = np.sqrt(dt)
    x = np.full(size, float(x0))
    dead = np.zeros(size, dtype=bool)
    for k in range(n_steps):
        t = k * dt
        z = rng.standard_normal(size)
        x_arg = np.maximum(x, 0.0) if spec.absorb_at_zero else x
        x = x + spec.drift(t, x_arg) * dt + spec.diffusion(t, x_arg) * sqrt_dt * z
        if spec.absorb_at_zero:
            dead |= x <= 0.0
            x = np.where(dead, 0.0, x)
    return x


def mc_expectation(spec: SdeSpec, payoff: Callable[[np.ndarray], np.ndarray],
                   x0: float, tau: float, n_paths: int, n_steps: int,
                   seed: int) -> McEstimate:
    """Estimate E[payoff(X_tau) | X_0 = x0] along Euler-Maruyama paths.

    Parameters
    ----------
    spec : SdeSpec
        Process coefficients; see `cev_preset` and `cir_preset`.
    payoff : callable
        Vectorized terminal functional; must stay finite on the
        simulated support.
    n_paths, n_steps : int
        Sample size and time steps per path, both >= 1.
    seed : int
        Entropy root.  Identical inputs give a bit-identical estimate.

    Returns
    -------
    McEstimate
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if tau < 0.0:
        raise ValueError("tau must be non-negative")

    if tau == 0.0:
        val = float(np.asarray(payoff(np.array([float(x0)])))[0])
        if not np.isfinite(val):
            raise DletError("payoff is non-finite at x0")
        return McEstimate(mean=val, std_error=0.0, n_paths=n_paths,
                          seed=seed)

    chunks = []
    for batch in range((n_paths + BATCH_SIZE - 1) // BATCH_SIZE):
        size = min(BATCH_SIZE, n_paths - batch * BATCH_SIZE)
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=(seed, batch))))
        x_final = _simulate_batch(spec, x0, tau, n_steps, rng, size)
        vals = np.asarray(payoff(x_final), dtype=float)
        if vals.shape != x_final.shape:
            raise DletError("payoff must map samples elementwise")
        if not np.all(np.isfinite(vals)):
            raise DletError("payoff produced non-finite values "
                            "on the simulated support")
        chunks.append(vals)
    values = np.concatenate(chunks)
    mean = float(values.mean())
    if n_paths > 1:
        std_error = float(values.std(ddof=1) / np.sqrt(n_paths))
    else:
        std_error = 0.0
    return McEstimate(mean=mean, std_error=std_error, n_paths=n_paths,
                      seed=seed)
