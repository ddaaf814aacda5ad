"""Distributed codes, their constructions and finite-length bound checks."""
