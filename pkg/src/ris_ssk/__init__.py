"""Link-level simulation and reflection optimization for surface-assisted
space shift keying, with matching closed-form error analysis."""

from .analysis import (
    AbepQuery,
    GaussianApproxParams,
    abep_pb_two_tx,
    abep_ris,
    abep_ris_asymptotic,
    abep_source,
    abep_source_asymptotic,
    pep_astbc,
    q_chiani,
    q_exact,
)
from .astbc_link import (
    AstbcFrame,
    EquivalentChannel,
    combine,
    detect_astbc_fast,
    detect_astbc_optimal,
    encode_ris_bits,
    transmit_astbc,
)
from .beamform import (
    ReflectionVector,
    SdrOptions,
    brute_force_beamform,
    intelligent_ris_phases,
    low_complexity_beamform,
    min_pairwise_distance,
    optimal_two_tx,
    sdr_beamform,
)
from .channel import (
    ChannelRealization,
    NoiseModel,
    StreamBank,
    effective_gain,
    sample_awgn,
    sample_channel,
    substream,
)
from .harness import (
    BerRecord,
    SimConfig,
    estimate_diversity_slope,
    run_ber_sweep,
    validate_suite,
    write_csv,
    write_json,
)
from .pb_link import SskSymbol, detect_pb_ml, encode_ssk, transmit_pb

__version__ = "0.1.0"
