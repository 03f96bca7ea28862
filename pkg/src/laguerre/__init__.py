"""Simulation and verification toolkit for Poisson-Laguerre tessellations."""

from .model import Box, Family, ModelParams, Seed, TimeRange, Window, power
from .sampler import SeedSet, TruncationPlan, sample_process, truncation_plan

__all__ = [
    "Box",
    "Family",
    "ModelParams",
    "Seed",
    "SeedSet",
    "TimeRange",
    "TruncationPlan",
    "Window",
    "power",
    "sample_process",
    "truncation_plan",
]
__version__ = "0.1.0"
