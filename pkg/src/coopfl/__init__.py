"""Cooperative constraint functional-logic goal solving.

Programs are conditional rewrite rules over a language with symbolic,
finite-domain integer and real-arithmetic constraints.  Goals are
solved by constrained lazy narrowing; the pure solvers cooperate
through bridge constraints and bidirectional projections.
"""

__version__ = "0.1.0"
