"""Primal-dual averaging methods with computable accuracy certificates."""

from .acp import (
    AcpAggregator,
    Certificate,
    acp_init,
    acp_min,
    acp_min_dual,
    acp_update,
    certificate_gap,
    dual_certificate_gap,
)
from .algorithms import (
    gcg_init,
    gcg_step,
    gem_init,
    gem_step,
    mda_init,
    mda_step,
    schedule_eta,
    schedule_lambda,
    taa_init,
    taa_step,
)
from .harness import Algorithm, RunConfig, Status, VerificationReport, run
from .instances import (
    FisherMarketInstance,
    MatrixGameInstance,
    QuadBoxToy,
    brute_force_min,
    build_oracles,
    fisher_oracles,
    fisher_smoothness,
    game_oracles,
    quadbox_oracles,
)
from .oracles import (
    DomainError,
    ProblemOracles,
    UnsupportedError,
    pd_gap,
    phi_alpha,
    psi_alpha,
)

__version__ = "0.1.0"
