"""Crosstalk modeling toolkit for fixed-frequency transmon lattices.

Units everywhere: cyclic frequency in MHz, ZZ rates reported in kHz,
lengths in mm.  All model equations are homogeneous in the frequency
unit, so no angular-frequency conversion appears anywhere.
"""

__version__ = "0.1.0"
