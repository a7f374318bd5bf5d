"""Simulation of nonlocal quantum erasure of phase objects with polarization
Franson interference, plus a phase-card authentication model built on it."""

from .errors import AmbiguousTrimError, DomainError
from .polarization import (
    DephasedBellParams,
    TwoPhotonState,
    coincidence_probability,
    hwp_jones,
    make_dephased_bell,
    postselect_amplitudes,
)
from .scene import (
    Beam,
    FringeField,
    GlassObject,
    GridSpec,
    Noise,
    PhaseMap,
    Polygon,
    RasterMask,
    Rectangle,
    RegionSpec,
    SceneConfig,
    auto_trim,
    fringe_field,
    glass_opd,
    rasterize_arm,
    visibility_envelope,
)
from .imaging import (
    Basis,
    DetectionFrame,
    DifferenceImage,
    SnrReport,
    chi2_frame_test,
    difference_image,
    expected_counts,
    expected_rate_map,
    expected_snr,
    fit_contrast,
    fit_fringe,
    simulate_frame,
    snr,
)
from .auth import (
    AuthResult,
    KeyCard,
    random_card,
    required_pairs,
    run_authentication,
    tamper_model,
)

__version__ = "0.1.0"
