"""Exception types shared across the package."""

from __future__ import annotations


class RdemError(Exception):
    """Base class for all rdem errors."""


class ConfigError(RdemError):
    """A run configuration is invalid or references missing files."""


class NonFiniteDrift(RdemError):
    """The drift (or a Runge-Kutta stage built from it) produced NaN/inf.

    Carries the time, state and parameters at the failing evaluation so
    callers can either report the failure or map it to a zero weight.
    """

    def __init__(self, t, x, theta, step_index=None):
        self.t = t
        self.x = x
        self.theta = theta
        self.step_index = step_index
        where = f" at trajectory step {step_index}" if step_index is not None else ""
        super().__init__(
            f"non-finite drift{where}: t={t!r}, x={x!r}, theta={theta!r}"
        )


class InvalidBox(RdemError):
    """A box prior was given with some lower bound >= upper bound."""


class EmptyProposal(RdemError):
    """A particle-cloud initialisation received an empty proposal set."""


class AllWeightsZero(RdemError):
    """Every particle weight underflowed to zero; the filter degenerated."""

    def __init__(self, message, step_index=None):
        self.step_index = step_index
        super().__init__(message)


class DataFormatError(RdemError):
    """A data file exists but cannot be parsed as the documented CSV."""


class NonUniformGrid(RdemError):
    """An operation that assumes equally spaced observation times got
    a grid whose spacing varies beyond tolerance."""


class AllMassZero(RdemError):
    """Every grid node of a discrete posterior underflowed to zero mass."""


class DegenerateFit(RdemError):
    """A log-log rate fit has no usable (positive) error values."""
