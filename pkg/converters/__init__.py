"""Pauli algebra and fermion-to-qubit mappings"""
