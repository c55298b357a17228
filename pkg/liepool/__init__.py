"""Lie subalgebras of Pauli and fermionic generator pools, and order-invariant exponent products."""

__version__ = "0.1.0"
