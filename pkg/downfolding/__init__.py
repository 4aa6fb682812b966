"""Dense Fock-space downfolding checks"""
