"""Teleportation-fidelity detectors of quantum critical points in spin chains."""

__version__ = "0.1.0"
