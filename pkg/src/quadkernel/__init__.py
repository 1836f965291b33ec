"""Kernel-method toolkit for reflected Brownian motion and random walks in the quadrant."""
from __future__ import annotations

from .errors import *  # noqa: F401,F403
from .model import (D1, M1, M2, M3, REFERENCE_MODELS, ContinuousModel, DiscreteModel,
                    load_model, validate_continuous, validate_discrete)

__version__ = "0.1.0"

__all__ = ["ContinuousModel", "DiscreteModel", "M1", "M2", "M3", "D1", "REFERENCE_MODELS",
           "load_model", "validate_continuous", "validate_discrete", "__version__"]
