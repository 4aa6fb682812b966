"""Error mitigation"""
