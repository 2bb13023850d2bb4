"""Precomputed wavelet solutions of the scale-invariant parabolic equation.

The equation dQ/dtau = (sigma^2 x^(2 lam) / 2) Q_xx maps dilations of the
state to dilations of time: if Q solves it with terminal g(x), then
Q(2^((2-2 lam) i) tau, 2^i x) solves it with terminal g(2^i x).  A cache
therefore stores just two base surfaces, the solutions with the father and
mother wavelet as terminal condition, and evaluates every basis function

    2^(i/2) psi(2^i x - k)  ->  2^(i/2) Psi(2^((2-2 lam) i) tau, 2^i x - k)

by rescaling and translating those surfaces (fast mode).  Translation is
exact only for lam = 0, where the operator has constant coefficients;
exact mode instead solves one backward problem per requested basis index
and serves as ground truth for measuring the fast-mode error.

Time snapshots are geometrically spaced with ratio 2^(2-2 lam) (ratio 2
when lam = 1, where the exponent degenerates), so the rescaled lookups of
level i land exactly on stored rows whenever tau itself is a snapshot.
The spatial step must be dyadic for the same reason: 2^i x - k then maps
grid nodes to grid nodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import (
    DletError,
    GridTooSmallError,
    HorizonError,
    IndexRangeError,
)
from .pde import GridSolution, PdeSpec, theta_march
from .wavelets import WaveletBasis, WaveletExpansion, make_basis

LEVEL_SCAN_CAP = 32


@dataclass(frozen=True)
class DiffusionletCache:
    """Immutable bundle of precomputed base solutions.

    ``father_surface`` and ``mother_surface`` hold the solutions with the
    order-p father and mother wavelet as terminal condition, sampled on
    ``tau_snapshots`` x ``x_grid``.  In exact mode ``exact_father`` maps a
    translate k and ``exact_mother`` maps a pair (i, k) to the surface
    solved directly with that basis function as terminal condition.
    """

    lam: float
    sigma: float
    basis_order: int
    basis: WaveletBasis = field(repr=False)
    father_surface: GridSolution = field(repr=False)
    mother_surface: GridSolution = field(repr=False)
    tau_snapshots: np.ndarray = field(repr=False)
    x_extent: Tuple[float, float]
    mode: str
    scale_ratio: float
    snapshot_ratio: float
    exact_father: Optional[Dict[int, GridSolution]] = field(
        default=None, repr=False)
    exact_mother: Optional[Dict[Tuple[int, int], GridSolution]] = field(
        default=None, repr=False)
    exact_levels: Optional[Tuple[int, ...]] = None
    exact_period: Optional[int] = None
    build_params: dict = field(default_factory=dict)

    @property
    def tau_max(self) -> float:
        return float(self.tau_snapshots[-1])

    @property
    def x_grid(self) -> np.ndarray:
        return self.father_surface.x_grid


@dataclass(frozen=True)
class EssentialSupport:
    """Where the base surfaces exceed a threshold at one time.

    ``interval`` is the grid-aligned hull outside which both base surfaces
    stay within ``epsilon`` in absolute value (None when ``empty``).
    ``K_per_level[i]`` counts the translate half-width of the level-i
    window and ``I_max`` is the first level whose rescaled amplitude
    2^(i/2) max|Psi(2^((2-2 lam) i) tau, .)| falls to ``epsilon`` or
    below; ``level_scan_capped`` reports that no such level was found
    within the scan bound (the amplitudes need not decay when lam = 1).
    """

    epsilon: float
    tau: float
    interval: Optional[Tuple[float, float]]
    empty: bool
    K_per_level: Dict[int, int]
    I_max: int
    level_scan_capped: bool
    father_window: Optional[Tuple[float, float]]
    mother_windows: Dict[int, Tuple[float, float]] = field(repr=False,
                                                          default_factory=dict)


def _dyadic_exponent(dx: float) -> int:
    m = round(math.log2(1.0 / dx))
    if not (m >= 0 and dx == 2.0 ** (-m)):
        raise ValueError(f"dx={dx} must be a dyadic step 2^-m")
    return m


def _snapshot_ladder(tau_min: float, tau_max: float, ratio: float):
    if not 0.0 < tau_min <= tau_max:
        raise ValueError("need 0 < tau_min <= tau_max")
    count = max(0, math.ceil(math.log(tau_max / tau_min)
                             / math.log(ratio) - 1e-9))
    snaps = tau_min * ratio ** np.arange(count + 1)
    return np.concatenate(([0.0], snaps))


def build_cache(lam: float, sigma: float, basis: WaveletBasis,
                tau_max: float, *, tau_min: Optional[float] = None,
                dx: float = 1.0 / 128.0, n_substeps: int = 32,
                x_lo: Optional[float] = None, x_hi: Optional[float] = None,
                mode: str = "fast", exact_levels=None,
                exact_period: Optional[int] = None,
                scheme_theta: float = 0.5,
                rannacher_steps: int = 2) -> DiffusionletCache:
    """Solve the base problems and assemble a query cache.

    Parameters
    ----------
    lam, sigma : float
        Equation parameters; lam in [0, 1].
    basis : WaveletBasis
        Terminal wavelets; its dyadic resolution must be at least as fine
        as ``dx``.
    tau_max : float
        Query horizon.  The stored horizon is the smallest snapshot-ladder
        endpoint >= tau_max.
    tau_min : float
        First positive snapshot (default ``tau_max / ratio**6``).
    dx : float
        Dyadic spatial step 2^-m.
    n_substeps : int
        March steps between consecutive snapshots.
    x_lo, x_hi : float, optional
        Spatial extent.  Defaults cover the wavelet support plus a margin
        of six diffusion standard deviations at the horizon; an explicit
        extent smaller than that is rejected.
    mode : {"fast", "exact"}
        Exact mode additionally solves one problem per basis index for
        levels ``exact_levels`` with translates covering one period
        ``exact_period`` of reconstruction queries.
    """
    if mode not in ("fast", "exact"):
        raise ValueError("mode must be 'fast' or 'exact'")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if sigma <= 0.0 or tau_max <= 0.0:
        raise ValueError("sigma and tau_max must be positive")
    if n_substeps < 1:
        raise ValueError("n_substeps must be >= 1")
    m = _dyadic_exponent(dx)
    if m > basis.resolution:
        raise ValueError(
            f"dx=2^-{m} is finer than the basis resolution 2^-"
            f"{basis.resolution}; rebuild the basis with resolution >= {m}")

    scale_ratio = 2.0 ** (2.0 - 2.0 * lam)
    snapshot_ratio = scale_ratio if lam < 1.0 else 2.0
    if tau_min is None:
        tau_min = tau_max / snapshot_ratio ** 6
    snapshots = _snapshot_ladder(tau_min, tau_max, snapshot_ratio)
    horizon = float(snapshots[-1])

    support_hi = float(basis.support_length)
    margin = 6.0 * sigma * math.sqrt(horizon) * max(1.0, support_hi) ** lam
    required_lo = 0.0 if lam > 0.0 else -margin
    required_hi = support_hi + margin
    if x_lo is None:
        x_lo = required_lo
    if x_hi is None:
        x_hi = required_hi
    if lam > 0.0 and x_lo != 0.0:
        raise ValueError("lam > 0 requires x_lo = 0 (degenerate boundary)")
    if x_lo > required_lo + 1e-9 or x_hi < required_hi - 1e-9:
        raise GridTooSmallError(
            f"extent [{x_lo}, {x_hi}] cannot contain the diffused wavelet "
            f"support; need x_lo <= {required_lo:.6g} and "
            f"x_hi >= {required_hi:.6g}")

    n_lo = int(math.floor(x_lo / dx + 1e-12))
    n_hi = int(math.ceil(x_hi / dx - 1e-12))
    x = np.arange(n_lo, n_hi + 1) * dx

    taus = [np.array([0.0])]
    for a, b in zip(snapshots[:-1], snapshots[1:]):
        taus.append(np.linspace(a, b, n_substeps + 1)[1:])
    taus = np.concatenate(taus)
    keep = np.arange(snapshots.size) * n_substeps

    spec = PdeSpec(lam=lam, sigma=sigma, x_lo=float(x[0]), x_hi=float(x[-1]),
                   horizon=horizon, r=0.0)

    columns = [basis.father(x), basis.mother(x)]
    exact_father_keys: list = []
    exact_mother_keys: list = []
    if mode == "exact":
        if exact_levels is None or exact_period is None:
            raise ValueError(
                "exact mode needs explicit exact_levels and exact_period")
        exact_levels = tuple(int(i) for i in exact_levels)
        if any(i < 0 for i in exact_levels):
            raise IndexRangeError("exact_levels must be non-negative")
        P = int(exact_period)
        lo_s, hi_s = float(x[0]), float(x[-1])
        for k in range(math.ceil(-hi_s), math.floor(P - lo_s) + 1):
            exact_father_keys.append(k)
            columns.append(basis.father(x - k))
        for i in exact_levels:
            amp = 2.0 ** (0.5 * i)
            for k in range(math.ceil(-hi_s),
                           math.floor(P * 2 ** i - lo_s) + 1):
                exact_mother_keys.append((i, k))
                columns.append(amp * basis.mother(2 ** i * x - k))

    terminal = np.stack(columns, axis=1)
    rows = theta_march(x, lambda t: spec.diffusion_half_sq(t, x),
                       lambda t: spec.drift(t, x), terminal, taus,
                       theta=scheme_theta, rannacher_steps=rannacher_steps,
                       keep=keep)
    if not np.all(np.isfinite(rows)):
        raise DletError("cache build produced non-finite values")

    def surface(col):
        return GridSolution(tau_grid=snapshots.copy(), x_grid=x.copy(),
                            values=rows[:, :, col].copy())

    exact_father = None
    exact_mother = None
    if mode == "exact":
        exact_father = {k: surface(2 + j)
                        for j, k in enumerate(exact_father_keys)}
        base = 2 + len(exact_father_keys)
        exact_mother = {key: surface(base + j)
                        for j, key in enumerate(exact_mother_keys)}

    return DiffusionletCache(
        lam=lam, sigma=sigma, basis_order=basis.order, basis=basis,
        father_surface=surface(0), mother_surface=surface(1),
        tau_snapshots=snapshots, x_extent=(float(x[0]), float(x[-1])),
        mode=mode, scale_ratio=scale_ratio, snapshot_ratio=snapshot_ratio,
        exact_father=exact_father, exact_mother=exact_mother,
        exact_levels=tuple(exact_levels) if mode == "exact" else None,
        exact_period=int(exact_period) if mode == "exact" else None,
        build_params={"dx": dx, "n_substeps": int(n_substeps),
                      "tau_min": float(tau_min),
                      "scheme_theta": float(scheme_theta),
                      "rannacher_steps": int(rannacher_steps),
                      "margin": float(margin),
                      "basis_resolution": int(basis.resolution)})


def _check_horizon(cache: DiffusionletCache, scaled_tau: float) -> None:
    if scaled_tau > cache.tau_max * (1.0 + 1e-9):
        raise HorizonError(
            f"scaled time {scaled_tau:.6g} exceeds the cache horizon "
            f"{cache.tau_max:.6g}; rebuild with tau_max >= {scaled_tau:.6g}")


def eval_father(cache: DiffusionletCache, k: int, tau: float, x):
    """Translate-k father solution at (tau, x).

    Fast mode reads the base surface at x - k; exact mode reads the
    surface solved with the translated terminal.
    """
    _check_horizon(cache, tau)
    if cache.mode == "exact":
        surf = cache.exact_father.get(int(k))
        if surf is None:
            raise IndexRangeError(
                f"exact cache holds no father translate k={k}")
        return surf.interp(tau, x)
    return cache.father_surface.interp(tau, np.asarray(x, dtype=float) - k)


def eval_mother(cache: DiffusionletCache, i: int, k: int, tau: float, x):
    """Level-i, translate-k mother solution at (tau, x).

    Fast mode returns 2^(i/2) Psi(2^((2-2 lam) i) tau, 2^i x - k) from the
    base surface; exact mode reads the dedicated surface.  Raises
    HorizonError when the rescaled time leaves the cached range.
    """
    if i < 0:
        raise IndexRangeError("level i must be non-negative")
    scaled = cache.scale_ratio ** i * tau
    _check_horizon(cache, scaled)
    if cache.mode == "exact":
        surf = cache.exact_mother.get((int(i), int(k)))
        if surf is None:
            raise IndexRangeError(
                f"exact cache holds no mother surface (i={i}, k={k})")
        return surf.interp(tau, x)
    arg = 2.0 ** i * np.asarray(x, dtype=float) - k
    return 2.0 ** (0.5 * i) * cache.mother_surface.interp(scaled, arg)


def _tap_range(y: np.ndarray, lo_s: float, hi_s: float):
    return (math.ceil(float(np.min(y)) - hi_s),
            math.floor(float(np.max(y)) - lo_s))


def _check_expansion(cache: DiffusionletCache,
                     expansion: WaveletExpansion) -> None:
    if expansion.order != cache.basis_order:
        raise DletError(
            f"expansion order {expansion.order} does not match cache order "
            f"{cache.basis_order}")
    if cache.mode == "exact":
        if expansion.period != cache.exact_period:
            raise DletError(
                f"exact cache was built for period {cache.exact_period}, "
                f"expansion has period {expansion.period}")
        missing = [i for i in range(expansion.levels)
                   if i not in cache.exact_levels]
        if missing:
            raise DletError(
                f"exact cache lacks levels {missing}")


def reconstruct(cache: DiffusionletCache, expansion: WaveletExpansion,
                tau: float, x):
    """Solution surface value reconstructed from a wavelet expansion.

    Sums alpha_k times the translated father solution plus beta_{i,k}
    times the rescaled mother solutions, resolving the expansion's
    periodic indices against all contributing integer translates.
    """
    _check_expansion(cache, expansion)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    xr = x_arr - expansion.origin
    P = expansion.period
    lo_s, hi_s = cache.x_extent
    out = np.zeros_like(xr)

    _check_horizon(cache, tau)
    k_lo, k_hi = _tap_range(xr, lo_s, hi_s)
    for k in range(k_lo, k_hi + 1):
        coeff = expansion.alpha[k % P]
        if coeff == 0.0:
            continue
        if cache.mode == "exact":
            out += coeff * cache.exact_father[k].interp(tau, xr)
        else:
            out += coeff * cache.father_surface.interp(tau, xr - k)

    for i in range(expansion.levels):
        beta = expansion.betas[i]
        scaled = cache.scale_ratio ** i * tau
        _check_horizon(cache, scaled)
        y = 2.0 ** i * xr
        amp = 2.0 ** (0.5 * i)
        period_i = P * 2 ** i
        k_lo, k_hi = _tap_range(y, lo_s, hi_s)
        for k in range(k_lo, k_hi + 1):
            coeff = beta[k % period_i]
            if coeff == 0.0:
                continue
            if cache.mode == "exact":
                out += coeff * cache.exact_mother[(i, k)].interp(tau, xr)
            else:
                out += coeff * amp * cache.mother_surface.interp(scaled,
                                                                y - k)
    return out if np.ndim(x) else float(out[0])


def _window(x_nodes: np.ndarray, magnitude: np.ndarray,
            epsilon: float) -> Optional[Tuple[float, float]]:
    above = np.flatnonzero(magnitude > epsilon)
    if above.size == 0:
        return None
    return float(x_nodes[above[0]]), float(x_nodes[above[-1]])


def essential_support(cache: DiffusionletCache, epsilon: float,
                      tau: float) -> EssentialSupport:
    """Threshold geometry of the cache at one time.

    Computes the hull where either base surface exceeds ``epsilon``, the
    per-level translate windows of the rescaled mother amplitude, and the
    first level whose amplitude is certifiably at or below ``epsilon``.
    For rescaled times beyond the horizon the amplitude test uses the
    horizon row, which bounds later ones from above (the maximum decays
    in time), so a positive certificate stays valid.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    _check_horizon(cache, tau)
    xg = cache.x_grid
    f_row = np.abs(cache.father_surface.row(tau))
    m_row = np.abs(cache.mother_surface.row(tau))
    father_window = _window(xg, f_row, epsilon)
    interval = _window(xg, np.maximum(f_row, m_row), epsilon)

    windows: Dict[int, Tuple[float, float]] = {}
    k_per_level: Dict[int, int] = {}
    i_max = LEVEL_SCAN_CAP
    capped = True
    for i in range(LEVEL_SCAN_CAP + 1):
        scaled = min(cache.scale_ratio ** i * tau, cache.tau_max)
        amp_row = 2.0 ** (0.5 * i) * np.abs(
            cache.mother_surface.row(scaled))
        if float(amp_row.max()) <= epsilon:
            i_max = i
            capped = False
            break
        win = _window(xg, amp_row, epsilon)
        windows[i] = win
        k_per_level[i] = int(math.ceil(0.5 * (win[1] - win[0])))

    return EssentialSupport(
        epsilon=epsilon, tau=tau, interval=interval,
        empty=interval is None, K_per_level=k_per_level, I_max=i_max,
        level_scan_capped=capped, father_window=father_window,
        mother_windows=windows)


def truncated_reconstruct(cache: DiffusionletCache,
                          expansion: WaveletExpansion, epsilon: float,
                          tau: float, x):
    """Reconstruction keeping only terms above the epsilon geometry.

    Levels beyond ``I_max`` are dropped entirely and translate taps are
    kept only where the corresponding surface window exceeds ``epsilon``.
    Returns the value and the number of distinct nonzero stored
    coefficients that contributed.
    """
    _check_expansion(cache, expansion)
    support = essential_support(cache, epsilon, tau)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    xr = x_arr - expansion.origin
    P = expansion.period
    out = np.zeros_like(xr)
    used = set()

    if support.father_window is not None:
        w_lo, w_hi = support.father_window
        k_lo, k_hi = _tap_range(xr, w_lo, w_hi)
        for k in range(k_lo, k_hi + 1):
            y = xr - k
            mask = (y >= w_lo) & (y <= w_hi)
            if not mask.any():
                continue
            coeff = expansion.alpha[k % P]
            if coeff == 0.0:
                continue
            used.add(("father", k % P))
            if cache.mode == "exact":
                vals = cache.exact_father[k].interp(tau, xr)
            else:
                vals = cache.father_surface.interp(tau, y)
            out += np.where(mask, coeff * vals, 0.0)

    for i in range(min(expansion.levels, support.I_max + 1)):
        win = support.mother_windows.get(i)
        if win is None:
            continue
        w_lo, w_hi = win
        beta = expansion.betas[i]
        scaled = cache.scale_ratio ** i * tau
        _check_horizon(cache, scaled)
        y_all = 2.0 ** i * xr
        amp = 2.0 ** (0.5 * i)
        period_i = P * 2 ** i
        k_lo, k_hi = _tap_range(y_all, w_lo, w_hi)
        for k in range(k_lo, k_hi + 1):
            y = y_all - k
            mask = (y >= w_lo) & (y <= w_hi)
            if not mask.any():
                continue
            coeff = beta[k % period_i]
            if coeff == 0.0:
                continue
            used.add(("mother", i, k % period_i))
            if cache.mode == "exact":
                vals = cache.exact_mother[(i, k)].interp(tau, xr)
            else:
                vals = amp * cache.mother_surface.interp(scaled, y)
            out += np.where(mask, coeff * vals, 0.0)

    value = out if np.ndim(x) else float(out[0])
    return value, len(used)


def refinement_residual(cache: DiffusionletCache, tau: float) -> float:
    """Two-scale defect of the cached surfaces at one time.

    Checks Phi(tau, x) = sqrt(2) sum_n h_n Phi(2^(2-2 lam) tau, 2x - n)
    and the analogous identity for Psi with the g filter, returning the
    larger of the two relative L2 residuals over the grid.  The identity
    transfers the wavelet refinement equation through the solution
    operator; for lam > 0 the translation inside the sum is heuristic and
    the residual measures by how much it fails.
    """
    scaled = cache.scale_ratio * tau
    _check_horizon(cache, scaled)
    xg = cache.x_grid
    filt = cache.basis.filters
    rhs_f = np.zeros_like(xg)
    rhs_m = np.zeros_like(xg)
    for n in range(filt.length):
        vals = cache.father_surface.interp(scaled, 2.0 * xg - n)
        rhs_f += filt.h[n] * vals
        rhs_m += filt.g[n] * vals
    rhs_f *= math.sqrt(2.0)
    rhs_m *= math.sqrt(2.0)

    res = 0.0
    for surface, rhs in ((cache.father_surface, rhs_f),
                         (cache.mother_surface, rhs_m)):
        target = surface.row(tau)
        norm = float(np.linalg.norm(target))
        if norm == 0.0:
            raise DletError("surface row vanishes; residual undefined")
        res = max(res, float(np.linalg.norm(target - rhs)) / norm)
    return res


def translation_discrepancy(lam: float, sigma: float, basis: WaveletBasis,
                            k: int, tau: float, *, dx: float = 1.0 / 64.0,
                            n_substeps: int = 64,
                            margin: Optional[float] = None) -> float:
    """Relative L2 gap between translating the base solution and solving
    with the translated terminal.

    Zero for k = 0 by definition and zero up to discretization for
    lam = 0; for lam > 0 the positive value measures how far the paper's
    translate-the-surface step strays from the true solution.
    """
    k = int(k)
    if k == 0:
        return 0.0
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    _dyadic_exponent(dx)
    L = float(basis.support_length)
    if margin is None:
        margin = 6.0 * sigma * math.sqrt(tau) * max(1.0, L + abs(k)) ** lam
    lo = min(0.0, float(k)) - margin
    hi = max(L, L + k) + margin
    if lam > 0.0:
        lo = 0.0
    n_lo = int(math.floor(lo / dx))
    n_hi = int(math.ceil(hi / dx))
    x = np.arange(n_lo, n_hi + 1) * dx

    spec = PdeSpec(lam=lam, sigma=sigma, x_lo=float(x[0]), x_hi=float(x[-1]),
                   horizon=tau, r=0.0)
    terminal = np.stack([basis.father(x), basis.father(x - k)], axis=1)
    taus = np.linspace(0.0, tau, n_substeps + 1)
    rows = theta_march(x, lambda t: spec.diffusion_half_sq(t, x),
                       lambda t: spec.drift(t, x), terminal, taus,
                       keep=[n_substeps])
    base, translated = rows[0, :, 0], rows[0, :, 1]
    shifted = np.interp(x - k, x, base, left=0.0, right=0.0)
    norm = float(np.linalg.norm(translated))
    if norm == 0.0:
        raise DletError("translated solution vanishes on the grid")
    return float(np.linalg.norm(translated - shifted)) / norm


def save_cache(cache: DiffusionletCache, path: str) -> None:
    """Persist a cache to one .npz bundle; reloads bit-identically."""
    meta = {
        "format": "dlet-cache-1",
        "lam": cache.lam,
        "sigma": cache.sigma,
        "basis_order": cache.basis_order,
        "mode": cache.mode,
        "x_extent": list(cache.x_extent),
        "scale_ratio": cache.scale_ratio,
        "snapshot_ratio": cache.snapshot_ratio,
        "exact_levels": (list(cache.exact_levels)
                         if cache.exact_levels is not None else None),
        "exact_period": cache.exact_period,
        "build_params": cache.build_params,
    }
    arrays = {
        "tau_snapshots": cache.tau_snapshots,
        "x_grid": cache.x_grid,
        "father_values": cache.father_surface.values,
        "mother_values": cache.mother_surface.values,
    }
    if cache.mode == "exact":
        fk = sorted(cache.exact_father)
        arrays["exact_father_keys"] = np.array(fk, dtype=np.int64)
        arrays["exact_father_values"] = np.stack(
            [cache.exact_father[k].values for k in fk])
        mk = sorted(cache.exact_mother)
        arrays["exact_mother_keys"] = np.array(mk, dtype=np.int64)
        arrays["exact_mother_values"] = np.stack(
            [cache.exact_mother[key].values for key in mk])
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_cache(path: str) -> DiffusionletCache:
    """Rebuild a cache saved by `save_cache`."""
    with np.load(path, allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["meta"]))
        if meta.get("format") != "dlet-cache-1":
            raise DletError(f"unrecognized cache bundle format in {path}")
        snapshots = bundle["tau_snapshots"]
        xg = bundle["x_grid"]

        def surface(values):
            return GridSolution(tau_grid=snapshots.copy(), x_grid=xg.copy(),
                                values=values)

        exact_father = None
        exact_mother = None
        if meta["mode"] == "exact":
            fk = bundle["exact_father_keys"]
            fv = bundle["exact_father_values"]
            exact_father = {int(k): surface(fv[j])
                            for j, k in enumerate(fk)}
            mk = bundle["exact_mother_keys"]
            mv = bundle["exact_mother_values"]
            exact_mother = {(int(i), int(k)): surface(mv[j])
                            for j, (i, k) in enumerate(mk)}
        basis = make_basis(meta["basis_order"],
                           meta["build_params"]["basis_resolution"])
        return DiffusionletCache(
            lam=meta["lam"], sigma=meta["sigma"],
            basis_order=meta["basis_order"], basis=basis,
            father_surface=surface(bundle["father_values"]),
            mother_surface=surface(bundle["mother_values"]),
            tau_snapshots=snapshots.copy(),
            x_extent=tuple(meta["x_extent"]), mode=meta["mode"],
            scale_ratio=meta["scale_ratio"],
            snapshot_ratio=meta["snapshot_ratio"],
            exact_father=exact_father, exact_mother=exact_mother,
            exact_levels=(tuple(meta["exact_levels"])
                          if meta["exact_levels"] is not None else None),
            exact_period=meta["exact_period"],
            build_params=meta["build_params"])
