"""Kinetic Fokker-Planck simulator for nonequilibrium steady states."""
