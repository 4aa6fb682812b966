"""State-vector simulation, circuits and noise"""
