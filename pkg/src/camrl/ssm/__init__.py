from .lti import (
    DiscreteSSMParams,
    LTISSMParams,
    discretize_zoh,
    ssm_conv_apply,
    ssm_conv_kernel,
    ssm_recurrent,
)
from .mamba import (
    N_LAYERS,
    MambaConfig,
    causal_conv,
    init_mamba_block,
    init_mamba_stack,
    mamba_block,
    mamba_block_np,
    mamba_block_step_np,
    mamba_stack,
    mamba_stack_np,
    mamba_stack_step_np,
)
from .selective import (
    SelectiveSSMParams,
    associative_scan,
    associative_scan_selective,
    discretize_selective,
    init_selective,
    scan,
    selective_scan,
)
