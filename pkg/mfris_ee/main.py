"""
MF-RIS EE simulator - HTTP surface over the experiment use cases
"""

import os

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .logging_config import configure_logging
from .presentation.controllers.experiment_controller import router as experiment_router
from .presentation.middleware.error_handler import ErrorHandler

configure_logging()

app = FastAPI(
    title="MF-RIS Energy-Efficiency Simulator API",
    description="""
    ## Robust EE optimization for MF-RIS-aided downlinks

    - Worst-case (bounded) and outage-constrained (statistical) solvers
    - Parameter sweeps over transmit power, elements, RIS position, error level, antennas and users
    - Feasibility rates and interior-point complexity estimates

    Sweeps run synchronously; keep requests at desk scale.
    """,
    version=__version__,
)

allowed_origins = [url.strip() for url in os.getenv("ALLOWED_ORIGINS", "").split(",") if url.strip()]
if allowed_origins:
    app.add_middleware(
        CORSMiddleware,
        allow_origins=allowed_origins,
        allow_methods=["GET", "POST", "OPTIONS"],
        allow_headers=["Content-Type", "Accept", "Origin"],
    )

# Register Error Handlers
for exception_type, handler in ErrorHandler.get_error_handlers().items():
    app.add_exception_handler(exception_type, handler)

app.include_router(experiment_router)


@app.get("/health", tags=["Root"])
async def health():
    return {"status": "ok", "version": __version__}


@app.get("/", tags=["Root"])
async def root():
    """API root endpoint with service information"""
    return {
        "message": "MF-RIS Energy-Efficiency Simulator API",
        "version": __version__,
        "documentation": {
            "swagger_ui": "/docs",
            "redoc": "/redoc",
            "openapi_json": "/openapi.json"
        },
        "endpoints": {
            "schemes": "/api/v1/schemes",
            "complexity": "/api/v1/complexity",
            "sweeps": "/api/v1/sweeps",
            "feasibility": "/api/v1/feasibility"
        }
    }
