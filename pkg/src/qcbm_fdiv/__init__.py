"""f-divergence training of quantum circuit Born machines, with classical
simulations of fault-tolerant divergence estimators."""

__version__ = "0.1.0"
