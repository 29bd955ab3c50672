"""Site overhead cost estimation with small backpropagation networks."""

__version__ = "0.1.0"
