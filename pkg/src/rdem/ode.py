"""Fixed-step 4th-order Runge-Kutta propagation of ODE states.

Two conventions hold everywhere:

* states, times and parameters are float64;
* drift functions are vectorised: ``drift(x, t, theta)`` accepts
  ``x`` of shape ``(..., p)`` together with ``theta`` of shape
  ``(..., q)`` (leading axes broadcast) and a scalar ``t``.

All operations here are pure functions of their arguments and may be
called concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteDrift

DriftFn = Callable[[np.ndarray, float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OdeSystem:
    """A p-dimensional autonomous-or-not ODE with a q-dimensional parameter.

    Parameters
    ----------
    state_dim : int
        State dimension p >= 1.
    param_dim : int
        Parameter dimension q >= 1.
    drift : callable
        Vectorised right-hand side f(x, t, theta) -> dx/dt.
    theta_support : callable, optional
        Vectorised predicate on theta rows; None means all of R^q.
    name : str
        Registry name, informational.
    """

    state_dim: int
    param_dim: int
    drift: DriftFn
    theta_support: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def __post_init__(self):
        if self.state_dim < 1 or self.param_dim < 1:
            raise ValueError("state_dim and param_dim must be >= 1")

    def in_support(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.theta_support is None:
            return np.ones(theta.shape[:-1], dtype=bool)
        return np.asarray(self.theta_support(theta), dtype=bool)


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times t_0 < t_1 < ... < t_n (n >= 1 steps).

    t_0 is the initial-condition time; the remaining points are where the
    trajectory is evaluated.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a time grid needs at least t0 and one step")
        if not np.all(np.isfinite(pts)):
            raise ValueError("time grid contains non-finite points")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def steps(self) -> np.ndarray:
        """Step lengths h_{i+1} = t_{i+1} - t_i."""
        return np.diff(self.points)

    @property
    def n_steps(self) -> int:
        return self.points.size - 1


def _raise_nonfinite(out, x, t, theta):
    if out.ndim > 1:
        j = int(np.nonzero(~np.isfinite(out).all(axis=-1))[0][0])
        x_bad = x[j] if x.ndim > 1 else x
        th_bad = theta[j] if theta.ndim > 1 else theta
        raise NonFiniteDrift(t=t, x=x_bad, theta=th_bad)
    raise NonFiniteDrift(t=t, x=x, theta=theta)


def rk4_step(sys: OdeSystem, x, t: float, h: float, theta, check: bool = True):
    """One classical Runge-Kutta step of length h from (x, t).

    Returns x + (k1 + 2 k2 + 2 k3 + k4) / 6 with the usual four stages.
    With ``check`` the step raises :class:`NonFiniteDrift` as soon as the
    result contains NaN/inf; with ``check=False`` non-finite values pass
    through (particle filters map them to zero weights instead).
    """
    if h <= 0:
        raise ValueError("step length h must be positive")
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    f = sys.drift
    half = 0.5 * h
    with np.errstate(all="ignore"):
        k1 = h * f(x, t, theta)
        k2 = h * f(x + 0.5 * k1, t + half, theta)
        k3 = h * f(x + 0.5 * k2, t + half, theta)
        k4 = h * f(x + k3, t + h, theta)
        out = x + (k1 + 2.0 * (k2 + k3) + k4) / 6.0
    if check and not np.all(np.isfinite(out)):
        _raise_nonfinite(out, x, t, theta)
    return out


def composite_step(sys: OdeSystem, x, t: float, h: float, m: int, theta,
                   check: bool = True):
    """m chained RK4 sub-steps of length h/m covering [t, t+h].

    ``composite_step(..., m=1)`` is exactly ``rk4_step``.
    """
    m = int(m)
    if m < 1:
        raise ValueError("segment count m must be >= 1")
    sub = h / m
    out = np.asarray(x, dtype=float)
    for j in range(m):
        out = rk4_step(sys, out, t + j * sub, sub, theta, check=check)
    return out


def integrate(sys: OdeSystem, x0, grid: TimeGrid, m: int, theta,
              check: bool = True) -> np.ndarray:
    """Propagate x0 through every grid interval; returns x_1..x_n.

    The output stacks the composite-step images along a new leading axis
    of length ``grid.n_steps`` (initial state not included).  On a
    non-finite drift the error reports the failing trajectory index.
    """
    x = np.asarray(x0, dtype=float)
    pts = grid.points
    out = np.empty((grid.n_steps,) + x.shape, dtype=float)
    for i in range(grid.n_steps):
        try:
            x = composite_step(sys, x, pts[i], pts[i + 1] - pts[i], m, theta,
                               check=check)
        except NonFiniteDrift as err:
            raise NonFiniteDrift(err.t, err.x, err.theta, step_index=i + 1) from None
        out[i] = x
    return out
