"""Logical-qubit encodings of two interacting qubits in a common Ohmic bath."""

__version__ = "0.1.0"
