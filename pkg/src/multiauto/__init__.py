"""Deterministic two-way unary multiautomata with bounded broadcast communication.

Submodules:

- ``model``: automata and system data types plus validation.
- ``sim``: ground-truth step simulator.
- ``dynamics``: basic sequences, take-off classification, phase constants.
- ``presburger``: formula AST, bounded evaluation, quantifier elimination,
  ultimately periodic set extraction.
- ``construction``: executable build of the Presburger acceptance formulas.
- ``cli``: the ``multiauto`` command line tool.
"""

__version__ = "0.1.0"
