"""Physical constants (CODATA 2018, exact SI definitions).

Quoted to nine significant figures in the docs; the values below are the
exact defining constants.
"""

PLANCK = 6.62607015e-34  # J s
SPEED_OF_LIGHT = 299_792_458.0  # m / s
BOLTZMANN = 1.380649e-23  # J / K
