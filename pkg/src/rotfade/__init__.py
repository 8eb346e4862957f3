"""Diversity exponents and Monte Carlo validation for rotated coded modulation
over Nakagami-m block-fading channels."""

__version__ = "0.1.0"

from .channel import (
    ChannelRealization,
    FadingSpec,
    apply_channel,
    rician_to_m,
    sample_fading,
    to_alpha,
)
from .codedmod import (
    ConvCode,
    FrameConfig,
    bcjr_decode,
    conv_encode,
    demap_app,
    map_frame,
    simulate_fer,
)
from .constellation import Constellation, difference_set, make_qam
from .exponents import (
    ExponentQuery,
    block_diversity,
    optimal_exponent,
    random_coding_lower_bound,
    singleton_block_diversity,
    theorem_exponent,
    upper_bound,
)
from .mutual_info import MiEstimate, discrete_block_mi, gaussian_mi, scheme_mi
from .outage import (
    DiscreteModel,
    GaussianModel,
    SimCurve,
    estimate_outage,
    fit_slope,
    outage_sweep,
    wilson_interval,
)
from .rotation import (
    Rotation,
    catalog,
    full_diversity_margin,
    identity,
    rotate,
    unitarity_residual,
)
from .seeding import derive_rng
