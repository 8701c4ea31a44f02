"""Built-in ODE systems: Newton cooling, FitzHugh-Nagumo, Lotka-Volterra.

Each constructor returns an :class:`~rdem.ode.OdeSystem` whose drift is
vectorised over particle batches: state rows of shape (..., p) pair with
parameter rows of shape (..., q).
"""

from __future__ import annotations

import numpy as np

from .ode import OdeSystem


def _cooling_drift(x, t, theta):
    th1 = theta[..., 0:1]
    th2 = theta[..., 1:2]
    return th1 * (x - th2)


def _cooling_support(theta):
    th1, th2 = theta[..., 0], theta[..., 1]
    return (-100.0 < th1) & (th1 < 0.0) & (50.0 < th2) & (th2 < 150.0)


def cooling_system() -> OdeSystem:
    """Newton's law of cooling: dx/dt = theta1 (x - theta2), p=1, q=2.

    theta1 is the (negative) rate, theta2 the ambient temperature; the
    parameter support is the open box (-100, 0) x (50, 150).
    """
    return OdeSystem(state_dim=1, param_dim=2, drift=_cooling_drift,
                     theta_support=_cooling_support, name="cooling")


def cooling_solution(x0, theta, t):
    """Closed-form cooling trajectory theta2 - (theta2 - x0) e^{theta1 t}.

    ``t`` is the time elapsed since the state was x0; scalar or array.
    """
    x0 = np.squeeze(np.asarray(x0, dtype=float))
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    th1 = theta[..., 0]
    th2 = theta[..., 1]
    return th2 - (th2 - x0) * np.exp(th1 * t)


def _fhn_drift(x, t, theta):
    x1 = x[..., 0]
    x2 = x[..., 1]
    th1 = theta[..., 0]
    th2 = theta[..., 1]
    th3 = theta[..., 2]
    d1 = th3 * (x1 - x1 ** 3 / 3.0 + x2)
    d2 = -(x1 - th1 + th2 * x2) / th3
    return np.stack([d1, d2], axis=-1)


def _fhn_support(theta):
    th1, th2, th3 = theta[..., 0], theta[..., 1], theta[..., 2]
    return ((-0.8 < th1) & (th1 < 0.8)
            & (-0.8 < th2) & (th2 < 0.8)
            & (0.0 < th3) & (th3 < 8.0))


def fitzhugh_nagumo_system() -> OdeSystem:
    """FitzHugh-Nagumo spike-potential model, p=2, q=3.

    dx1/dt = theta3 (x1 - x1^3/3 + x2)
    dx2/dt = -(x1 - theta1 + theta2 x2) / theta3
    """
    return OdeSystem(state_dim=2, param_dim=3, drift=_fhn_drift,
                     theta_support=_fhn_support, name="fitzhugh-nagumo")


def _lv_drift(x, t, theta):
    x1 = x[..., 0]
    x2 = x[..., 1]
    th1 = theta[..., 0]
    th2 = theta[..., 1]
    th3 = theta[..., 2]
    th4 = theta[..., 3]
    d1 = x1 * (th1 - th2 * x2)
    d2 = -x2 * (th3 - th4 * x1)
    return np.stack([d1, d2], axis=-1)


def lotka_volterra_system() -> OdeSystem:
    """Lotka-Volterra predator-prey model, p=2, q=4.

    dx1/dt = x1 (theta1 - theta2 x2)
    dx2/dt = -x2 (theta3 - theta4 x1)

    No built-in parameter box: positivity is left to the configured
    prior, and negative state excursions are tolerated unless they
    actually overflow.
    """
    return OdeSystem(state_dim=2, param_dim=4, drift=_lv_drift,
                     theta_support=None, name="lotka-volterra")


def lotka_volterra_invariant(x, theta):
    """First integral theta4 x1 - theta3 ln x1 + theta2 x2 - theta1 ln x2."""
    x = np.asarray(x, dtype=float)
    th1, th2, th3, th4 = np.asarray(theta, dtype=float)
    x1 = x[..., 0]
    x2 = x[..., 1]
    return th4 * x1 - th3 * np.log(x1) + th2 * x2 - th1 * np.log(x2)


REGISTRY = {
    "cooling": cooling_system,
    "fitzhugh-nagumo": fitzhugh_nagumo_system,
    "lotka-volterra": lotka_volterra_system,
}

# Open parameter boxes that double as default uniform-prior bounds where
# the model defines one (Lotka-Volterra intentionally has none).
DEFAULT_THETA_BOX = {
    "cooling": (np.array([-100.0, 50.0]), np.array([0.0, 150.0])),
    "fitzhugh-nagumo": (np.array([-0.8, -0.8, 0.0]), np.array([0.8, 0.8, 8.0])),
}


def get_system(name: str) -> OdeSystem:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(
            f"unknown model {name!r}; available: {sorted(REGISTRY)}") from None
