"""Hamiltonian file readers and writers"""
