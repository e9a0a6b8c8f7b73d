"""Simulation toolkit for macroscopic-realism tests with entangled cat states,
macroscopic qubits, and NOON-state qubits."""

__version__ = "0.1.0"
