"""varjet: first-order Hamiltonian structure of second-order field Lagrangians.

The package computes, for second-order Lagrangian densities whose
Poincare-Cartan form descends to the first-order jet bundle: momenta and
Hamiltonians, equivalent first-order Lagrangians, regularity data, Noether
currents, Jacobi (linearized) equations and the presymplectic pairing of
Jacobi fields, with closed-form instantiations for the Einstein-Hilbert
and generalized BF Lagrangians.
"""

__version__ = "0.1.0"
