"""Benchmark harness for encrypted malicious-traffic classification."""

__version__ = "0.1.0"
