"""Covariance and Nica-covariance checks for product systems."""
