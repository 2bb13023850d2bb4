"""Variance propagation from wavelet coefficients to solution values.

Coefficient uncertainties are modeled by a carre-du-champ operator Gamma
acting diagonally on the expansion: independent coefficients with
Gamma[a_k, a_k] = gamma(k) a_k^2.  Because the solution map is linear in
the coefficients, the variance field of the solution is the quadratic
form

    Gamma[Q(tau, x)] = sum_k gamma(k) alpha_k^2 Phi_k(tau, x)^2
                     + sum_{i,k} gamma(i,k) beta_{i,k}^2 Psi_{i,k}(tau, x)^2

over the (periodized) diffusionlet values, with the covariance given by
the matching bilinear form.  The sharp construction draws one standard
normal per coefficient; squaring and averaging the resulting linear field
recovers Gamma, which gives a Monte-Carlo handle on the closed forms.  An
independent oracle perturbs the coefficients and re-solves the equation
outright, with no use of the cache.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import math

import numpy as np

from .diffusionlets import DiffusionletCache, eval_father, eval_mother
from .errors import DletError
from .feynman_kac import McEstimate
from .pde import PdeSpec, theta_march
from .wavelets import WaveletBasis, WaveletExpansion, evaluate_expansion


@dataclass(frozen=True)
class ErrorStructureSpec:
    """Per-index variance weights gamma(k) and gamma(i, k)."""

    gamma_father: Callable[[int], float]
    gamma_mother: Callable[[int, int], float]
    label: str = "custom"


def proportional_weights(c: float = 1.0, eta: float = 0.0) -> ErrorStructureSpec:
    """Constant father weights c and mother weights c 2^(-eta i)."""
    if c < 0.0:
        raise ValueError("c must be non-negative")
    return ErrorStructureSpec(
        gamma_father=lambda k: c,
        gamma_mother=lambda i, k: c * 2.0 ** (-eta * i),
        label=f"proportional(c={c}, eta={eta})")


@dataclass(frozen=True)
class SharpSample:
    """One standard-normal draw per expansion coefficient."""

    seed: int
    hat_alpha: Dict[int, float]
    hat_beta: Dict[Tuple[int, int], float]


@dataclass
class VarianceField:
    """Solution-variance values over a (tau, x) grid."""

    tau_grid: np.ndarray
    x_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.tau_grid.size, self.x_grid.size):
            raise ValueError("values shape does not match grids")
        if np.any(self.values < -1e-15):
            raise ValueError("variance values must be non-negative")


def _father_weights(weights: ErrorStructureSpec, P: int) -> np.ndarray:
    g = np.array([float(weights.gamma_father(k)) for k in range(P)])
    if np.any(~np.isfinite(g)) or np.any(g < 0.0):
        raise DletError("father weights must be finite and non-negative")
    return g


def _mother_weights(weights: ErrorStructureSpec, i: int,
                    count: int) -> np.ndarray:
    g = np.array([float(weights.gamma_mother(i, k)) for k in range(count)])
    if np.any(~np.isfinite(g)) or np.any(g < 0.0):
        raise DletError("mother weights must be finite and non-negative")
    return g


def _index_matrices(expansion: WaveletExpansion, x,
                    father_eval: Callable, mother_eval: Callable,
                    extent: Tuple[float, float]):
    """Per-stored-index values of the (periodized) basis family at x.

    Returns (F, M) with F of shape (P, len(x)) accumulating the father
    family and M[i] of shape (P 2^i, len(x)) the level-i mother family;
    ``father_eval(k, xr)`` and ``mother_eval(i, k, xr)`` supply values of
    one integer translate.
    """
    xr = np.atleast_1d(np.asarray(x, dtype=float)) - expansion.origin
    P = expansion.period
    lo_s, hi_s = extent
    F = np.zeros((P, xr.size))
    k_lo = math.ceil(float(np.min(xr)) - hi_s)
    k_hi = math.floor(float(np.max(xr)) - lo_s)
    for k in range(k_lo, k_hi + 1):
        F[k % P] += father_eval(k, xr)
    M = []
    for i in range(expansion.levels):
        Pi = P * 2 ** i
        Mi = np.zeros((Pi, xr.size))
        y = 2.0 ** i * xr
        k_lo = math.ceil(float(np.min(y)) - hi_s)
        k_hi = math.floor(float(np.max(y)) - lo_s)
        for k in range(k_lo, k_hi + 1):
            Mi[k % Pi] += mother_eval(i, k, xr)
        M.append(Mi)
    return F, M


def _basis_matrices(expansion: WaveletExpansion, basis: WaveletBasis, x):
    L = float(basis.support_length)
    return _index_matrices(
        expansion, x,
        lambda k, xr: basis.father(xr - k),
        lambda i, k, xr: 2.0 ** (0.5 * i) * basis.mother(2.0 ** i * xr - k),
        (0.0, L))


def _cache_matrices(cache: DiffusionletCache, expansion: WaveletExpansion,
                    tau: float, x):
    return _index_matrices(
        expansion, x,
        lambda k, xr: np.atleast_1d(eval_father(cache, k, tau, xr)),
        lambda i, k, xr: np.atleast_1d(eval_mother(cache, i, k, tau, xr)),
        cache.x_extent)


def _quadratic_form(expansion: WaveletExpansion,
                    weights: ErrorStructureSpec, F, M,
                    F2=None, M2=None):
    if F2 is None:
        F2, M2 = F, M
    gf = _father_weights(weights, expansion.period)
    out = (gf * expansion.alpha ** 2) @ (F * F2)
    for i in range(expansion.levels):
        gm = _mother_weights(weights, i, expansion.betas[i].size)
        out += (gm * expansion.betas[i] ** 2) @ (M[i] * M2[i])
    return out


def gamma_terminal(expansion: WaveletExpansion,
                   weights: ErrorStructureSpec, basis: WaveletBasis, x):
    """Variance of the terminal condition at x.

    Evaluates sum_k gamma(k) alpha_k^2 phi_k(x)^2 plus the mother terms
    over the periodized basis functions.
    """
    F, M = _basis_matrices(expansion, basis, x)
    out = _quadratic_form(expansion, weights, F, M)
    return out if np.ndim(x) else float(out[0])


def gamma_solution(cache: DiffusionletCache, expansion: WaveletExpansion,
                   weights: ErrorStructureSpec, tau: float, x):
    """Variance of the solution at (tau, x).

    The same quadratic form as `gamma_terminal` with basis functions
    replaced by their evolved surfaces; at tau=0 the two coincide.
    """
    F, M = _cache_matrices(cache, expansion, tau, x)
    out = _quadratic_form(expansion, weights, F, M)
    return out if np.ndim(x) else float(out[0])


def covariance_solution(cache: DiffusionletCache,
                        expansion: WaveletExpansion,
                        weights: ErrorStructureSpec,
                        point1: Tuple[float, float],
                        point2: Tuple[float, float]) -> float:
    """Covariance of the solution between (tau1, x1) and (tau2, x2)."""
    tau1, x1 = point1
    tau2, x2 = point2
    F1, M1 = _cache_matrices(cache, expansion, tau1, x1)
    F2, M2 = _cache_matrices(cache, expansion, tau2, x2)
    out = _quadratic_form(expansion, weights, F1, M1, F2, M2)
    return float(out[0])


def variance_field(cache: DiffusionletCache, expansion: WaveletExpansion,
                   weights: ErrorStructureSpec, taus,
                   xs) -> VarianceField:
    """Tabulate gamma_solution over a (tau, x) product grid."""
    taus = np.asarray(taus, dtype=float)
    xs = np.asarray(xs, dtype=float)
    values = np.stack([
        np.maximum(gamma_solution(cache, expansion, weights, float(t), xs),
                   0.0)
        for t in taus])
    return VarianceField(tau_grid=taus, x_grid=xs, values=values)


def draw_sharp_sample(expansion: WaveletExpansion, seed: int) -> SharpSample:
    """Standard-normal draws for every coefficient, reproducible by seed.

    Draw order is fixed: alpha indices ascending, then each level's beta
    indices ascending.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    P = expansion.period
    hat_alpha = {k: float(z) for k, z in
                 enumerate(rng.standard_normal(P))}
    hat_beta = {}
    for i in range(expansion.levels):
        for k, z in enumerate(rng.standard_normal(P * 2 ** i)):
            hat_beta[(i, k)] = float(z)
    return SharpSample(seed=seed, hat_alpha=hat_alpha, hat_beta=hat_beta)


def sharp_field(cache: DiffusionletCache, expansion: WaveletExpansion,
                weights: ErrorStructureSpec, sample: SharpSample,
                tau: float, x) -> float:
    """One sharp realization sum_k sqrt(gamma(k)) alpha_k a^_k Phi_k.

    Linear in the draws; the mean of its square over samples recovers
    `gamma_solution`.
    """
    F, M = _cache_matrices(cache, expansion, tau, x)
    gf = _father_weights(weights, expansion.period)
    try:
        za = np.array([sample.hat_alpha[k]
                       for k in range(expansion.period)])
    except KeyError as exc:
        raise DletError(f"sharp sample lacks alpha draw {exc}") from None
    out = (np.sqrt(gf) * expansion.alpha * za) @ F
    for i in range(expansion.levels):
        count = expansion.betas[i].size
        gm = _mother_weights(weights, i, count)
        try:
            zb = np.array([sample.hat_beta[(i, k)] for k in range(count)])
        except KeyError as exc:
            raise DletError(
                f"sharp sample lacks beta draw {exc}") from None
        out += (np.sqrt(gm) * expansion.betas[i] * zb) @ M[i]
    return float(out[0]) if np.ndim(x) == 0 else out


def sharp_square_mean(cache: DiffusionletCache,
                      expansion: WaveletExpansion,
                      weights: ErrorStructureSpec, n_samples: int,
                      seed: int, tau: float, x) -> McEstimate:
    """Empirical mean of sharp_field^2 over many draws at one point.

    Batches all draws through the linear form, so the cost is one cache
    evaluation plus an (n_samples x n_coefficients) matrix product.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    F, M = _cache_matrices(cache, expansion, tau, x)
    gf = _father_weights(weights, expansion.period)
    coef = [np.sqrt(gf) * expansion.alpha * F[:, 0]]
    for i in range(expansion.levels):
        gm = _mother_weights(weights, i, expansion.betas[i].size)
        coef.append(np.sqrt(gm) * expansion.betas[i] * M[i][:, 0])
    coef = np.concatenate(coef)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    fields = rng.standard_normal((n_samples, coef.size)) @ coef
    sq = fields ** 2
    return McEstimate(mean=float(sq.mean()),
                      std_error=float(sq.std(ddof=1) / np.sqrt(n_samples)),
                      n_paths=n_samples, seed=seed)


def perturb_and_solve_mc(expansion: WaveletExpansion,
                         weights: ErrorStructureSpec, basis: WaveletBasis,
                         pde_spec: PdeSpec, nx: int, nt: int,
                         epsilon: float, n_samples: int, seed: int,
                         tau: float, x: float) -> McEstimate:
    """Variance oracle: perturb coefficients, re-solve, take the variance.

    Each sample multiplies coefficient a by 1 + sqrt(epsilon gamma) Z with
    independent standard normals, rebuilds the terminal condition, and
    solves the equation directly on an (nx, nt) grid; the empirical
    variance of the solution values at (tau, x), divided by epsilon, is
    returned.  No diffusionlet machinery is involved, which makes this an
    independent check of `gamma_solution`.  The reported std_error uses
    the Gaussian sampling law of the variance (the field is linear in the
    draws), sqrt(2/(n-1)) times the estimate.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if tau > pde_spec.horizon * (1.0 + 1e-12):
        raise ValueError("tau exceeds the solver horizon")

    xg = np.linspace(pde_spec.x_lo, pde_spec.x_hi, nx)
    base = evaluate_expansion(expansion, basis, xg)
    F, M = _basis_matrices(expansion, basis, xg)

    gf = _father_weights(weights, expansion.period)
    scales = [np.sqrt(epsilon * gf) * expansion.alpha]
    mats = [F]
    for i in range(expansion.levels):
        gm = _mother_weights(weights, i, expansion.betas[i].size)
        scales.append(np.sqrt(epsilon * gm) * expansion.betas[i])
        mats.append(M[i])
    scale = np.concatenate(scales)
    B = np.vstack(mats)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    Z = rng.standard_normal((n_samples, scale.size))
    terminal = base[:, None] + B.T @ (scale[:, None] * Z.T)

    if tau == 0.0:
        rows = terminal
    else:
        taus = np.linspace(0.0, tau, nt + 1)
        rows = theta_march(xg, lambda t: pde_spec.diffusion_half_sq(t, xg),
                           lambda t: pde_spec.drift(t, xg), terminal, taus,
                           keep=[nt])[0]

    j = int(np.clip(np.searchsorted(xg, x) - 1, 0, nx - 2))
    w = (x - xg[j]) / (xg[j + 1] - xg[j])
    vals = (1.0 - w) * rows[j] + w * rows[j + 1]
    var = float(np.var(vals, ddof=1)) / epsilon
    se = var * math.sqrt(2.0 / (n_samples - 1))
    return McEstimate(mean=var, std_error=se, n_paths=n_samples, seed=seed)


def _stencil(u, x: float, h: float):
    if callable(u):
        return float(u(x - h)), float(u(x)), float(u(x + h)), h, x
    nodes, values = u
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    j = int(np.clip(np.argmin(np.abs(nodes - x)), 1, nodes.size - 2))
    step = float(nodes[1] - nodes[0])
    return (float(values[j - 1]), float(values[j]), float(values[j + 1]),
            step, float(nodes[j]))


def ou_gamma(u, x: float, h: float = 1e-4) -> float:
    """Squared derivative (u'(x))^2 by central differences.

    ``u`` is a callable or a (nodes, values) pair; sampled input is
    evaluated at the nearest interior node with the sample spacing as
    step.
    """
    lo, _, hi, step, _ = _stencil(u, x, h)
    return ((hi - lo) / (2.0 * step)) ** 2


def ou_generator(u, x: float, h: float = 1e-4) -> float:
    """Bias operator u''(x)/2 - x u'(x)/2 by central differences."""
    lo, mid, hi, step, x_eff = _stencil(u, x, h)
    d1 = (hi - lo) / (2.0 * step)
    d2 = (hi - 2.0 * mid + lo) / step ** 2
    return 0.5 * d2 - 0.5 * x_eff * d1
