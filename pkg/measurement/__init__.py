"""Measurement grouping and shot-based estimation"""
