"""hurwitzlab: exact-arithmetic laboratory for braid orbits of Hurwitz
tuples, lifting invariants, Frobenius-fixed component counts, the random
Gamma-group model, and empirical class-group statistics."""

__version__ = "0.1.0"
