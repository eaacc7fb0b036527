"""
Shared retry strategy for the E_m adjustment loop.

A PLS search that comes back Infeasible is retried with a relaxed
inference-error bound. Attempt k (0-based) runs with E_m * decay^k; after
1 + max_adjustments attempts the last Infeasible propagates.

Any other error propagates immediately.
"""
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_none

from ..constants import DEFAULT_E_M_DECAY, DEFAULT_E_M_MAX_ADJUSTMENTS
from .errors import Infeasible


# ============================================================================
# RETRY LOGIC
# ============================================================================

def e_m_retrying(max_adjustments: int = DEFAULT_E_M_MAX_ADJUSTMENTS) -> Retrying:
    """Retrying controller allowing `max_adjustments` relaxations after the first try."""
    if max_adjustments < 0:
        raise ValueError(f"max_adjustments must be >= 0, got {max_adjustments}")
    return Retrying(
        stop=stop_after_attempt(1 + max_adjustments),
        wait=wait_none(),
        retry=retry_if_exception_type(Infeasible),
        reraise=True,
    )


def relaxed_e_m(e_m: float, attempt_number: int, decay: float = DEFAULT_E_M_DECAY) -> float:
    """E_m used by a 1-based tenacity attempt number."""
    if not 0.0 < decay <= 1.0:
        raise ValueError(f"decay must be in (0, 1], got {decay}")
    return e_m * decay ** (attempt_number - 1)
