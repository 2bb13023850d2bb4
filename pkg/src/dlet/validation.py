"""Self-contained validation suites with machine-readable reports.

Each suite exercises one pillar of the library against an independent
route (constraint oracles, closed forms, Monte Carlo, or brute-force
re-solves) and returns a report of named checks.  A check is ``pass`` or
``fail`` against a frozen tolerance, or ``informational`` when the
quantity is reported without a bound (regimes where the underlying
identity is only approximate).  The suite fails only if a bounded check
fails.
"""

from __future__ import annotations

import time

import numpy as np

from .diffusionlets import build_cache, refinement_residual, \
    translation_discrepancy
from .errors import DletError
from .error_structure import gamma_solution, gamma_terminal, \
    perturb_and_solve_mc, proportional_weights, sharp_square_mean
from .feynman_kac import cev_preset, cir_preset, mc_expectation
from .pde import PdeSpec, closed_form_heat, consistency_gap, \
    solve_backward, solve_discounted
from .presets import call_payoff, gaussian_bump
from .wavelets import daubechies_filter, filter_report, fwt_decompose, \
    make_basis

SUITE_NAMES = ("filters", "heat_oracle", "self_similarity", "refinement",
               "translation", "variance_mc", "sharp", "cir", "cev")


def _check(name: str, value: float, tolerance=None,
           informational: bool = False, runtime: float = 0.0) -> dict:
    if informational:
        status = "informational"
    else:
        status = "pass" if value < tolerance else "fail"
    return {"name": name, "status": status, "value": float(value),
            "tolerance": None if tolerance is None else float(tolerance),
            "runtime_s": round(runtime, 4)}


def _suite_filters(seed: int) -> list:
    checks = []
    for p in (1, 2, 3, 4, 6, 8, 10):
        t0 = time.perf_counter()
        rep = filter_report(daubechies_filter(p))
        worst = max(rep["sum_residual"], rep["orthonormality_residual"],
                    rep["moment_residual"], rep["qmr_residual"])
        checks.append(_check(f"p={p} constraint residuals", worst, 1e-10,
                             runtime=time.perf_counter() - t0))
    return checks


def _suite_heat_oracle(seed: int) -> list:
    t0 = time.perf_counter()
    bump = gaussian_bump()
    sol = solve_discounted(0.0, 1.0, bump, -4.0, 12.0, 1.0, 1025, 512)
    xg = sol.x_grid
    terminal = (xg, bump(xg))
    checks = []
    for tau in (0.1, 0.5, 1.0):
        exact = closed_form_heat(1.0, terminal, tau, xg)
        rel = float(np.max(np.abs(sol.row(tau) - exact))
                    / np.max(np.abs(exact)))
        checks.append(_check(f"tau={tau} vs closed form", rel, 1e-3,
                             runtime=time.perf_counter() - t0))
        t0 = time.perf_counter()
    return checks


def _suite_self_similarity(seed: int) -> list:
    bump = gaussian_bump()
    tau0 = 1.0 / 16.0
    checks = []
    for lam in (0.0, 0.5, 1.0):
        x_lo = 0.0 if lam > 0.0 else -4.0
        for alpha in (2.0, 4.0):
            t0 = time.perf_counter()
            tau_base = alpha ** (2.0 - 2.0 * lam) * tau0
            nx = int(round((12.0 - x_lo) * 128)) + 1
            base = solve_discounted(lam, 1.0, bump, x_lo, 12.0, tau_base,
                                    nx, 256)
            nxd = int(round((12.0 - x_lo) / alpha * 128)) + 1
            direct = solve_discounted(
                lam, 1.0, lambda y: bump(alpha * y), x_lo / alpha,
                12.0 / alpha, tau0, nxd, 64)
            xs = np.linspace(2.0 / alpha, 6.0 / alpha, 257)
            got = base.interp(tau_base, alpha * xs)
            want = direct.interp(tau0, xs)
            rel = float(np.max(np.abs(got - want))
                        / np.max(np.abs(want)))
            checks.append(_check(
                f"lambda={lam} alpha={alpha} rescaling", rel, 2e-3,
                runtime=time.perf_counter() - t0))
    return checks


def _suite_refinement(seed: int) -> list:
    basis = make_basis(4)
    checks = []
    t0 = time.perf_counter()
    cache = build_cache(0.0, 1.0, basis, 1.0, tau_min=1.0 / 16.0,
                        dx=1.0 / 128.0, n_substeps=32)
    for tau in (0.0, 0.25):
        checks.append(_check(
            f"lambda=0 tau={tau} two-scale residual",
            refinement_residual(cache, tau), 2e-3,
            runtime=time.perf_counter() - t0))
        t0 = time.perf_counter()
    for lam, sig in ((0.5, 1.0), (1.0, 0.3)):
        t0 = time.perf_counter()
        c = build_cache(lam, sig, basis, 1.0, tau_min=1.0 / 16.0,
                        dx=1.0 / 128.0, n_substeps=32, x_lo=0.0)
        checks.append(_check(
            f"lambda={lam} tau=0.25 two-scale residual",
            refinement_residual(c, 0.25), informational=True,
            runtime=time.perf_counter() - t0))
    return checks


def _suite_translation(seed: int) -> list:
    basis = make_basis(4)
    t0 = time.perf_counter()
    v0 = translation_discrepancy(0.0, 1.0, basis, 2, 0.25)
    checks = [_check("lambda=0 k=2 commutation", v0, 1e-6,
                     runtime=time.perf_counter() - t0)]
    t0 = time.perf_counter()
    v1 = translation_discrepancy(0.5, 1.0, basis, 1, 0.25)
    checks.append(_check("lambda=0.5 k=1 commutation", v1,
                         informational=True,
                         runtime=time.perf_counter() - t0))
    return checks


def _variance_fixture():
    basis = make_basis(4)
    xs = np.arange(64) / 8.0
    samples = np.exp(-0.5 * ((xs - 4.0) / 0.6) ** 2)
    expansion = fwt_decompose(samples, basis.filters, levels=3)
    cache = build_cache(0.0, 1.0, basis, 1.0, tau_min=1.0 / 16.0,
                        dx=1.0 / 128.0, n_substeps=32)
    return basis, expansion, cache, proportional_weights()


VARIANCE_PROBES = (2.5, 3.25, 4.0, 4.75, 5.5)


def _suite_variance_mc(seed: int) -> list:
    basis, expansion, cache, weights = _variance_fixture()
    tau = 1.0 / 16.0
    spec = PdeSpec(lam=0.0, sigma=1.0, x_lo=-8.0, x_hi=16.0, horizon=tau)
    checks = []
    for j, x in enumerate(VARIANCE_PROBES):
        t0 = time.perf_counter()
        mc = perturb_and_solve_mc(expansion, weights, basis, spec, 193, 32,
                                  1e-4, 10000, seed + j, 0.0, x)
        closed = gamma_terminal(expansion, weights, basis, x)
        checks.append(_check(
            f"terminal variance at x={x}",
            abs(mc.mean - closed) / closed, 0.05,
            runtime=time.perf_counter() - t0))
    for j, x in enumerate(VARIANCE_PROBES):
        t0 = time.perf_counter()
        mc = perturb_and_solve_mc(expansion, weights, basis, spec, 193, 32,
                                  1e-4, 10000, seed + 100 + j, tau, x)
        closed = gamma_solution(cache, expansion, weights, tau, x)
        checks.append(_check(
            f"solution variance at x={x}",
            abs(mc.mean - closed) / closed, 0.05,
            runtime=time.perf_counter() - t0))
    return checks


def _suite_sharp(seed: int) -> list:
    _, expansion, cache, weights = _variance_fixture()
    tau = 1.0 / 16.0
    checks = []
    for j, x in enumerate((2.5, 4.0, 5.5)):
        t0 = time.perf_counter()
        est = sharp_square_mean(cache, expansion, weights, 100000,
                                seed + j, tau, x)
        closed = gamma_solution(cache, expansion, weights, tau, x)
        gap = abs(est.mean - closed)
        checks.append(_check(
            f"sharp square mean at x={x} (units of SE)",
            gap / est.std_error, 3.0,
            runtime=time.perf_counter() - t0))
    return checks


def _suite_cir(seed: int) -> list:
    b, sig, x0, tau = 0.5, 0.3, 1.0, 1.0
    t0 = time.perf_counter()
    mc = mc_expectation(cir_preset(b, sig), lambda x: x, x0, tau, 100000,
                        512, seed)
    t_mc = time.perf_counter() - t0
    t0 = time.perf_counter()
    spec = PdeSpec(lam=0.5, sigma=sig, x_lo=0.0, x_hi=6.0, horizon=tau,
                   mu=lambda t, x: -b * x,
                   sigma_fn=lambda t, x: sig * np.sqrt(np.maximum(x, 0.0)))
    pde = solve_backward(spec, lambda x: x, 769, 256).interp(tau, x0)
    checks = [
        _check("mean-reverting linear payoff (units of SE)",
               abs(pde - mc.mean) / mc.std_error, 3.0,
               runtime=t_mc + time.perf_counter() - t0),
        _check("exact-mean gap exp(-b tau)", abs(pde - x0 * np.exp(-b * tau)),
               informational=True),
    ]
    return checks


def _suite_cev(seed: int) -> list:
    sig, strike, x0, tau = 0.2, 1.0, 1.0, 1.0
    payoff = call_payoff(strike)
    t0 = time.perf_counter()
    mc = mc_expectation(cev_preset(0.0, sig, 1.0), payoff, x0, tau, 100000,
                        512, seed)
    t_mc = time.perf_counter() - t0
    t0 = time.perf_counter()
    pde = solve_discounted(1.0, sig, payoff, 0.0, 4.0, tau, 1025,
                           256).interp(tau, x0)
    checks = [
        _check("lognormal call (units of SE)",
               abs(pde - mc.mean) / mc.std_error, 3.0,
               runtime=t_mc + time.perf_counter() - t0),
    ]
    t0 = time.perf_counter()
    gap = consistency_gap(
        PdeSpec(lam=1.0, sigma=sig, x_lo=0.0, x_hi=4.0, horizon=tau,
                r=0.05), payoff, 513, 128)
    checks.append(_check("discount reduction gap at r=0.05", gap,
                         informational=True,
                         runtime=time.perf_counter() - t0))
    return checks


_SUITES = {
    "filters": _suite_filters,
    "heat_oracle": _suite_heat_oracle,
    "self_similarity": _suite_self_similarity,
    "refinement": _suite_refinement,
    "translation": _suite_translation,
    "variance_mc": _suite_variance_mc,
    "sharp": _suite_sharp,
    "cir": _suite_cir,
    "cev": _suite_cev,
}


def run_suite(name: str, seed: int = 0) -> dict:
    """Run one named suite and return its check report."""
    if name not in _SUITES:
        raise DletError(f"unknown suite {name!r}; expected one of "
                        + ", ".join(SUITE_NAMES))
    t0 = time.perf_counter()
    checks = _SUITES[name](seed)
    status = ("fail" if any(c["status"] == "fail" for c in checks)
              else "pass")
    return {"suite": name, "status": status, "checks": checks,
            "runtime_s": round(time.perf_counter() - t0, 4)}
