"""Core modules for spectra, feasibility, decomposition, planar and streaming constructions."""
