"""DS-CDMA uplink simulation with joint interference cancellation.

The package splits into a synchronous signal model (`signal_model`),
cancellation algebra (`ic`), per-symbol adaptive estimators
(`estimators`), full packet receivers (`receivers`), batch MMSE
solvers (`mmse`), and a Monte Carlo harness (`harness`).
"""

from cdma_jic.estimators import (
    ErrorSignals,
    EstimatorState,
    StepSizes,
    compute_errors,
    detect,
    update_h,
    update_lambda,
    update_w,
)
from cdma_jic.ic import (
    ICGroup,
    build_reconstruction_matrix,
    build_regen_matrix,
    cancel,
    conventional_cancel,
    pic_group,
    sic_schedule,
)
from cdma_jic.mmse import (
    AlternateResult,
    SampleStatistics,
    SingularStatisticsError,
    SymbolBatch,
    accumulate,
    alternate,
    batch_statistics,
    solve_h,
    solve_lambda,
    solve_w,
)
from cdma_jic.receivers import (
    RECEIVER_NAMES,
    LinearPipeline,
    PacketContext,
    PicPipeline,
    SicPipeline,
    make_pipeline,
)
from cdma_jic.signal_model import (
    ChannelVector,
    ConstraintMatrices,
    SpreadingCode,
    SymbolStream,
    UserConfig,
    build_constraint_matrices,
    generate_amplitudes,
    generate_channel,
    generate_code,
    generate_symbols,
    synthesize_packet,
    synthesize_received,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelVector",
    "ConstraintMatrices",
    "SpreadingCode",
    "SymbolStream",
    "UserConfig",
    "build_constraint_matrices",
    "generate_amplitudes",
    "generate_channel",
    "generate_code",
    "generate_symbols",
    "synthesize_packet",
    "synthesize_received",
    "ICGroup",
    "build_reconstruction_matrix",
    "build_regen_matrix",
    "cancel",
    "conventional_cancel",
    "pic_group",
    "sic_schedule",
    "ErrorSignals",
    "EstimatorState",
    "StepSizes",
    "compute_errors",
    "detect",
    "update_h",
    "update_lambda",
    "update_w",
    "AlternateResult",
    "SampleStatistics",
    "SingularStatisticsError",
    "SymbolBatch",
    "accumulate",
    "alternate",
    "batch_statistics",
    "solve_h",
    "solve_lambda",
    "solve_w",
    "RECEIVER_NAMES",
    "LinearPipeline",
    "PacketContext",
    "PicPipeline",
    "SicPipeline",
    "make_pipeline",
    "__version__",
]
