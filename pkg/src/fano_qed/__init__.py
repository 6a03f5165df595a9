"""Few-photon scattering off a resonator with a direct (Fano) background pathway."""

from .coupling import (
    ConstraintReport,
    CouplingSet,
    DirectScattering,
    MicroscopicParams,
    ScatteringModel,
    SystemSpec,
    build_two_port_background,
    from_microscopic,
    solve_mirror_coupling,
    validate_constraints,
)
from .errors import (
    ConfigError,
    DiagnosticError,
    DomainError,
    QuadratureError,
    ResourceError,
    UnsupportedConfigurationError,
)
from .lattice import (
    LatticeSpec,
    OracleReport,
    build_single_sector,
    build_two_sector,
    compare_with_analytic,
    oracle_single_transmission,
    oracle_two_photon_g2,
)
from .single_photon import (
    AmplitudeTable,
    FanoFeatures,
    SpectralGrid,
    fano_features,
    s1_amplitude,
    transmission_spectrum,
    unitarity_residual,
)
from .two_photon import (
    CorrelationTrace,
    EffectiveCavity,
    QuadratureParams,
    TwoPhotonKernel,
    bound_state,
    connected_kernel,
    connected_kernel_numeric,
    fluorescence_weight,
    g2_trace,
    g2_zero_closed,
    outgoing_wavefunction,
)

__version__ = "0.1.0"
