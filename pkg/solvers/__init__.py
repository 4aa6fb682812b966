"""Ground-state solvers"""
