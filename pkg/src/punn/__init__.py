"""Hybrid quantum-neural wavefunctions: pair circuits, neural amplitude post-processing,
and the two-circuit measurement protocol, on a classical statevector emulator."""

__version__ = "0.1.0"
