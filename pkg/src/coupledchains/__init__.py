"""coupledchains: couplings, innovation encodings, and filtration
diagnostics for stationary binary processes.

Submodules:
  kernels        conditional laws, decay coefficients, stationary laws
  innovation     symbol/uniform codec and iid-uniform audits
  reconstruction path replay from innovations and renewal bounds
  vershik        optimal couplings, metric recursion, alpha sequence
  extension      orientation-driven innovations and block stitching
  reports        CSV / pretty emission
  harness        CLI and experiment configs
"""

__version__ = "0.1.0"

from .kernels import (
    CapExceededError,
    IIDKernel,
    LongMemoryKernel,
    MarkovKernel,
    builtin_kernels,
    conditional_prob,
    gamma_profile,
    lower_envelope,
    regime_check,
    stationary_word_law,
)
from .innovation import decode_xv, encode_w, innovation_audit
from .reconstruction import (
    disagreement_experiment,
    domination_experiment,
    house_of_cards_dist,
    simulate_path,
    window_reconstruct,
)
from .vershik import (
    GeneratorConfig,
    alpha_sequence,
    metric_tables,
    optimal_coupling,
    truncated_generator,
)
from .extension import (
    CouplingEngine,
    choose_anchor,
    generator_error_check,
    joint_step_law,
    stitch_blocks,
)

__all__ = [
    "CapExceededError",
    "CouplingEngine",
    "GeneratorConfig",
    "IIDKernel",
    "LongMemoryKernel",
    "MarkovKernel",
    "builtin_kernels",
    "choose_anchor",
    "conditional_prob",
    "decode_xv",
    "disagreement_experiment",
    "domination_experiment",
    "encode_w",
    "gamma_profile",
    "generator_error_check",
    "house_of_cards_dist",
    "innovation_audit",
    "joint_step_law",
    "lower_envelope",
    "metric_tables",
    "optimal_coupling",
    "regime_check",
    "simulate_path",
    "stationary_word_law",
    "stitch_blocks",
    "truncated_generator",
    "window_reconstruct",
    "__version__",
]
