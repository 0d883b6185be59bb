"""Discrete second-order Sobolev inequalities on Cayley graphs.

Modules
-------
cayley      groups, word-metric balls, growth, translations
calculus    differences, Laplacian, Hessian, norms, chain-rule check
semigroup   heat semigroup and ``(-Delta)^{1/2}``
hodge       edge 1-forms, divergence, Hodge splitting
green       lattice Green's function of ``-Delta``
cutoff      explicit cutoff functions and their norm decay
feasible    finite feasible sets for the Sobolev quotient
variational best-constant minimisation and diagnostics
pde         p-biharmonic ground state and Lane-Emden system
"""

__version__ = "0.1.0"
