"""Named terminal-condition presets and their text syntax.

Presets give reproducible terminal conditions for batch runs: smooth
(``gaussian_bump``), kinked (``call_payoff``), discontinuous
(``indicator``), or tabulated (``csv:path`` with two-column x,value
rows, linearly interpolated).  ``parse_preset`` turns the command-line
syntax ``name`` or ``name(arg, ...)`` into an evaluable preset.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DletError


@dataclass(frozen=True)
class TerminalPreset:
    """A named terminal condition f(x) with its resolved parameters."""

    name: str
    fn: Callable
    params: dict

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def sample(self, origin: float, period: int, levels: int) -> np.ndarray:
        """Values at the ``period * 2^levels`` decomposition nodes."""
        n = period * 2 ** levels
        x = origin + np.arange(n) * 2.0 ** (-levels)
        return self(x)


def gaussian_bump(center: float = 4.0, width: float = 0.6) -> TerminalPreset:
    if width <= 0.0:
        raise DletError("gaussian_bump width must be positive")
    return TerminalPreset(
        name="gaussian_bump",
        fn=lambda x: np.exp(-0.5 * ((x - center) / width) ** 2),
        params={"center": center, "width": width})


def call_payoff(strike: float) -> TerminalPreset:
    if strike < 0.0:
        raise DletError("call_payoff strike must be non-negative")
    return TerminalPreset(
        name="call_payoff",
        fn=lambda x: np.maximum(x - strike, 0.0),
        params={"strike": strike})


def indicator(a: float, b: float) -> TerminalPreset:
    if not a < b:
        raise DletError("indicator requires a < b")
    return TerminalPreset(
        name="indicator",
        fn=lambda x: np.where((x >= a) & (x < b), 1.0, 0.0),
        params={"a": a, "b": b})


def linear_payoff(slope: float = 1.0, intercept: float = 0.0
                  ) -> TerminalPreset:
    return TerminalPreset(
        name="linear_payoff",
        fn=lambda x: slope * x + intercept,
        params={"slope": slope, "intercept": intercept})


def from_csv(path: str) -> TerminalPreset:
    """Tabulated samples from two-column x,value rows, interpolated."""
    try:
        rows = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=_header_rows(path))
    except (OSError, ValueError) as exc:
        raise DletError(f"cannot read samples from {path}: {exc}") from exc
    if rows.shape[1] != 2:
        raise DletError(f"{path}: expected two columns x,value")
    xs, vals = rows[:, 0], rows[:, 1]
    if xs.size < 2 or np.any(np.diff(xs) <= 0.0):
        raise DletError(f"{path}: x column must be strictly increasing")
    if np.any(~np.isfinite(rows)):
        raise DletError(f"{path}: samples must be finite")
    return TerminalPreset(
        name="csv",
        fn=lambda x: np.interp(x, xs, vals),
        params={"path": str(path), "rows": int(xs.size)})


def _header_rows(path: str) -> int:
    with open(path) as handle:
        first = handle.readline()
    try:
        float(first.split(",")[0])
    except ValueError:
        return 1
    return 0


_FACTORIES = {
    "gaussian_bump": gaussian_bump,
    "call_payoff": call_payoff,
    "indicator": indicator,
    "linear_payoff": linear_payoff,
}

_CALL_RE = re.compile(r"^([a-z_]+)\s*(?:\(([^)]*)\))?$")


def parse_preset(text: str) -> TerminalPreset:
    """Parse ``name``, ``name(a, b)``, or ``csv:path`` preset syntax."""
    text = text.strip()
    if text.startswith("csv:"):
        return from_csv(text[4:])
    m = _CALL_RE.match(text)
    if m is None or m.group(1) not in _FACTORIES:
        known = ", ".join(sorted(_FACTORIES) + ["csv:PATH"])
        raise DletError(f"unknown preset {text!r}; expected one of {known}")
    factory = _FACTORIES[m.group(1)]
    args = []
    if m.group(2):
        try:
            args = [float(tok) for tok in m.group(2).split(",")]
        except ValueError:
            raise DletError(f"preset arguments in {text!r} must be numbers")
    try:
        return factory(*args)
    except TypeError:
        raise DletError(f"wrong number of arguments in preset {text!r}")
