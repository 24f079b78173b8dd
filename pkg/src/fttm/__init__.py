"""Simulator and verification harness for a colony-based fault-tolerant Turing machine."""

__version__ = "0.1.0"
