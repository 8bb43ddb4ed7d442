"""
Domain entities.
"""
