"""Beam-based interleaved training for hybrid massive-antenna downlink.

Simulates the interleaved single-user and multi-user training/transmission
schemes on beamspace channel realizations and evaluates the matching
closed-form average-training-length and outage expressions, so each side can
be validated against the other.
"""

from .analytic import (
    AnalyticValidityError,
    TrainingLengthPmf,
    avg_training_length,
    avg_training_length_asymptotic,
    hierarchical_training_length,
    outage_it_su,
    outage_single_rf,
    outage_single_rf_asymptote,
    pmf_training_length,
)
from .channel import (
    ChannelConfig,
    ChannelRealization,
    FixedPaths,
    ScaledPaths,
    antenna_domain_vector,
    dft_beam,
    dump_realization,
    effective_gain,
    realization_records,
    sample_channel,
)
from .harness import ExperimentSpec, compare_report, emit, load_summary, run_experiment
from .mu import (
    ExhaustiveCapError,
    MuEpisodeResult,
    MuSystemConfig,
    check_feasible,
    exhaustive_assignment,
    it_mu_episode,
    maxmin_assignment,
    nit_mu_full,
    nit_mu_partial,
    zf_lambda,
    zf_precoders,
)
from .rng import StreamKey
from .special import (
    LogProb,
    log_binomial,
    lower_inc_gamma_int,
    ordered_partial_sum_pdf,
    upper_inc_gamma_int,
    xi,
)
from .su import (
    SuEpisodeResult,
    SuSystemConfig,
    it_su_episode,
    nit_su_full,
    nit_su_partial,
    su_beamformers,
    su_rate_episode,
)

__version__ = "0.1.0"
