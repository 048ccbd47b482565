"""Exception hierarchy shared by all modules."""

import numpy as np


class MCError(Exception):
    """Base class for errors raised by mc_implicit."""


class DimensionError(MCError, ValueError):
    """Shapes are empty, mismatched, or out of range."""


class NonFiniteError(MCError, ValueError):
    """An input contains NaN or Inf."""


class SingularityError(MCError, np.linalg.LinAlgError):
    """A matrix that must have full column rank does not."""

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class NotOrthonormalError(MCError, ValueError):
    """A basis fails the orthonormality tolerance."""


class AsymmetryError(MCError, ValueError):
    """A matrix that must be symmetric is not (beyond tolerance)."""


class DivergenceError(MCError, RuntimeError):
    """Gradient descent left the stable region at iteration ``t``."""

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class ConfigError(MCError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ArtifactError(MCError, ValueError):
    """A stored run artifact is missing data or does not reproduce."""
