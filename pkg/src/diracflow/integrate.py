"""Classical fixed-step Runge-Kutta shared by the graph flow and the circle model."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

State = tuple[np.ndarray, ...]


def rk4_step(f: Callable[[State], Sequence[np.ndarray]], y: State, h: float) -> State:
    k1 = f(y)
    k2 = f(tuple(a + 0.5 * h * k for a, k in zip(y, k1)))
    k3 = f(tuple(a + 0.5 * h * k for a, k in zip(y, k2)))
    k4 = f(tuple(a + h * k for a, k in zip(y, k3)))
    return tuple(
        a + (h / 6.0) * (p + 2.0 * q + 2.0 * r + s)
        for a, p, q, r, s in zip(y, k1, k2, k3, k4)
    )


def step_grid(t_end: float, dt: float) -> tuple[int, float]:
    """Number of steps and the (possibly slightly shrunk) step that lands on t_end."""
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    if dt > t_end:
        raise ValueError("dt must not exceed t_end")
    n = int(np.ceil(t_end / dt - 1e-9))
    return n, t_end / n
