"""Exposure-aware infrared/visible fusion toolkit: overexposure synthesis,
region-masked losses, iterative refinement schedules, baseline fusion and
fusion quality metrics."""

__version__ = "0.1.0"
