"""Independent numerical oracles: an SRBM simulator, a lattice solver and ray fits."""
from __future__ import annotations

from .fitting import DecayFit, RateMLE, fit_decay_rate, rate_mle
from .lattice import LatticeSolution, lattice_stationary
from .simulate import Accumulators, SimConfig, empirical_laplace, load_accumulators, simulate_srbm

__all__ = ["SimConfig", "Accumulators", "simulate_srbm", "empirical_laplace", "load_accumulators",
           "LatticeSolution", "lattice_stationary", "DecayFit", "fit_decay_rate", "RateMLE", "rate_mle"]
