"""Joint tensor-network + VQE optimization of the transverse-field Ising chain."""

__version__ = "0.1.0"
