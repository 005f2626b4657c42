"""Inhomogeneous Diophantine approximation via negative continued fractions."""
