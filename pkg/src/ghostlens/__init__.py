"""Wave-optics simulation of odd-order aberration cancellation in correlated-photon imaging."""
from .aberration import (
    AberrationSpec,
    MonomialTerm,
    PhaseMap,
    ZernikeTerm,
    decompose_parity,
    noll_to_nm,
    pupil_factor,
    synthesize_phase,
    zernike,
)
from .baseline import compare_ghost_vs_baseline, incoherent_image
from .ghost import (
    CoincidenceImage,
    TwoPhotonAmplitude,
    classical_ghost,
    ghost_fast,
    ghost_oracle,
    image_metrics,
)
from .noise import cancellation_report, estimate_g2, generate_traces
from .scene import (
    ComplexField,
    GridGeometry,
    ObjectMask,
    OpticalLayout,
    PumpModel,
    make_layout,
    sample_pump,
    standard_objects,
)

__version__ = "0.1.0"
