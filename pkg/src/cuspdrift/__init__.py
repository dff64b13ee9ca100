"""cuspdrift: numerical spectral deformation on hyperbolic surfaces.

Eisenstein series and scattering determinants for the modular group and
Gamma_0(N), modular symbols and the character deformation family they
generate, twisted (higher-order) Eisenstein series, the deformation
operators of the character family, Dirichlet series built from coefficient
data, and an argument-principle resonance tracker verified on synthetic
scattering models.
"""

__version__ = "0.1.0"
