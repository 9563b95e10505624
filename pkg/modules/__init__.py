# ============================================================================
# MODULE PACKAGE INITIALIZER
# ============================================================================

"""
Chlodowsky q-Favard-Szasz Operator Lab - Modular Components
q-calculus kernel, q-Appell systems, the operator with its moment formulas,
and the weighted-approximation experiments built on top of it.
"""

__version__ = "1.0.0"
