"""techconverge: document corpora -> temporal topic graphs -> convergence signals."""

__version__ = "0.1.0"
