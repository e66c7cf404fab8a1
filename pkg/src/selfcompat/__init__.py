"""Self-compatibility scoring for causal discovery outputs."""

__version__ = "0.1.0"
