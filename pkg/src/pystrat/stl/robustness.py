"""Quantitative (robustness) semantics over sampled signals."""

from __future__ import annotations

import numpy as np

from ..core.exceptions import ContractError, WindowOverflowError
from ..dynamics.trajectory import Trajectory
from .formula import (
    Always, And, Eventually, Not, Or, Predicate, Region, StlFormula, Until,
    formula_horizon
)


__all__ = ['robustness', 'robustness_signal']


def _window_min(values: np.ndarray, a: int, b: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(values, b + 1)
    return windows[:, a:].min(axis=1)


def _window_max(values: np.ndarray, a: int, b: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(values, b + 1)
    return windows[:, a:].max(axis=1)


def _until(left: np.ndarray, right: np.ndarray, a: int, b: int
           ) -> np.ndarray:
    length = min(len(left), len(right)) - b
    out = np.empty(length)
    for t in range(length):
        best = -np.inf
        prefix = np.inf
        for tp in range(t, t + b + 1):
            if tp >= t + a:
                best = max(best, min(right[tp], prefix))
            prefix = min(prefix, left[tp])
        out[t] = best
    return out


def robustness_signal(formula: StlFormula, states: np.ndarray) -> np.ndarray:
    """Robustness at every step t for which the formula's window fits.

    Arguments:
        formula: The formula.
        states: Signal samples of shape (T, n).

    Returns:
        Array of length T - formula_horizon(formula); entry t is the
        robustness at step t. Empty when the signal is too short.
    """

    match formula:
        case Predicate(a, b):
            if len(a) > states.shape[1]:
                raise ContractError(
                    f'Predicate over {len(a)} entries, signal has '
                    f'{states.shape[1]}'
                )
            return b - states[:, :len(a)] @ np.asarray(a)
        case Region():
            return robustness_signal(formula.expand(), states)
        case Not(child):
            return -robustness_signal(child, states)
        case And(children) | Or(children):
            parts = [robustness_signal(c, states) for c in children]
            length = min(len(p) for p in parts)
            stacked = np.stack([p[:length] for p in parts])
            if isinstance(formula, And):
                return stacked.min(axis=0)
            return stacked.max(axis=0)
        case Always(a, b, child):
            values = robustness_signal(child, states)
            if len(values) <= b:
                return np.empty(0)
            return _window_min(values, a, b)
        case Eventually(a, b, child):
            values = robustness_signal(child, states)
            if len(values) <= b:
                return np.empty(0)
            return _window_max(values, a, b)
        case Until(a, b, left, right):
            left_values = robustness_signal(left, states)
            right_values = robustness_signal(right, states)
            if min(len(left_values), len(right_values)) <= b:
                return np.empty(0)
            return _until(left_values, right_values, a, b)

    raise ContractError(f'Not a formula: {formula!r}')


def robustness(formula: StlFormula, traj: Trajectory | np.ndarray,
               t: int = 0) -> float:
    """Robustness degree of the signal at step t; its sign tells whether
    the formula is satisfied.

    Raises:
        WindowOverflowError: If the formula looks past the end of the signal.
    """

    states = traj.states if isinstance(traj, Trajectory) else np.asarray(
        traj, dtype=float
    )
    if states.ndim == 1:
        states = states.reshape(-1, 1)

    needed = t + formula_horizon(formula)
    if t < 0 or needed > len(states) - 1:
        raise WindowOverflowError(
            f'Formula needs steps {t}..{needed}, signal has {len(states)}'
        )

    return float(robustness_signal(formula, states)[t])
