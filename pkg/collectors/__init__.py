"""Remote data collectors"""
