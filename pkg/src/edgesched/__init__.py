"""Constrained-UCB scheduling of LLM inference services on an edge-cloud fleet."""

__version__ = "0.1.0"
