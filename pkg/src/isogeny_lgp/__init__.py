"""Group-theoretic tooling for local-global questions about cyclic isogenies:
arithmetic in Z/l^n Z, subgroups of GL2, exceptional-subgroup searches,
modular-curve genus via coset actions, CM Cartan analysis, and Frobenius
trace witnesses.
"""

from .modring import PrimePowerModulus, Residue
from .mat2 import LineClass, Mat2

__all__ = ["PrimePowerModulus", "Residue", "Mat2", "LineClass"]
__version__ = "0.1.0"
