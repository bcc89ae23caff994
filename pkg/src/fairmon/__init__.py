"""Runtime monitoring of fairness properties on partially observed Markov chains."""

__version__ = "0.1.0"
