from typing import List

from fastapi import APIRouter, HTTPException, Query, status

from ...application.dtos.experiment_dtos import (
    ComplexityResponse, ExperimentConfig, FeasibilityRequest, FeasibilityResponse, SchemeResponse,
    SweepResponse,
)
from ...infrastructure.di_container import container
from ...logging_config import get_logger

logger = get_logger(__name__)

router = APIRouter(prefix="/api/v1", tags=["Experiments"])


@router.get("/schemes", response_model=List[SchemeResponse])
async def list_schemes():
    """Surface variants with their constraint overrides"""

    use_case = container.get_singleton('list_schemes_use_case')
    return await use_case.execute()


@router.get("/complexity", response_model=ComplexityResponse)
async def complexity_estimate(
    N: int = Query(..., ge=1),
    M: int = Query(..., ge=1),
    K: int = Query(..., ge=1),
):
    """Worst-case operation counts of the four convex subproblems"""

    use_case = container.get_singleton('complexity_estimate_use_case')
    return await use_case.execute(N, M, K)


@router.post("/sweeps", response_model=SweepResponse)
async def run_sweep(config: ExperimentConfig):
    """Run a parameter sweep; intended for desk-scale requests"""

    try:
        use_case = container.get_factory('run_sweep_use_case')()
        return await use_case.execute(config)

    except ValueError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=str(e)
        )
    except Exception as e:
        logger.error("sweep_request_failed", axis=config.axis, error=str(e))
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Failed to run sweep: {str(e)}"
        )


@router.post("/feasibility", response_model=FeasibilityResponse)
async def feasibility_rate(request: FeasibilityRequest):
    """Feasibility rate per (M, N, delta) cell"""

    try:
        use_case = container.get_factory('feasibility_rate_use_case')()
        return await use_case.execute(request)

    except ValueError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=str(e)
        )
    except Exception as e:
        logger.error("feasibility_request_failed", error=str(e))
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Failed to compute feasibility rate: {str(e)}"
        )
