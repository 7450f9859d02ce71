"""claritk — desk-scale secondary-treatment toolkit.

Calibrates settling and rheology models from plant data, screens clarifier
designs with 1D solids-flux models, simulates ASM1 biokinetics in idealized
reactors, and exports equivalent-momentum-source configuration for
submersible mixers.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
