import os
import traceback
import uuid
from typing import Any, Dict

from fastapi import HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from ...domain.exceptions import SimulationError
from ...logging_config import get_logger

logger = get_logger(__name__)


def _error_response(status_code: int, kind: str, message: Any, **extra) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": {"type": kind, "message": message, **extra}})


def _field_errors(exc) -> list:
    return [
        {"field": ".".join(str(part) for part in error["loc"]), "message": error["msg"], "type": error["type"]}
        for error in exc.errors()
    ]


class ErrorHandler:
    """Centralized error handling: domain errors 400, validation 422, the rest 500"""

    @staticmethod
    async def http_exception_handler(request: Request, exc: HTTPException) -> JSONResponse:
        logger.warning("http_error", path=request.url.path, status_code=exc.status_code, detail=exc.detail)
        return _error_response(exc.status_code, "HTTPException", exc.detail)

    @staticmethod
    async def validation_exception_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
        fields = _field_errors(exc)
        logger.warning("request_rejected", path=request.url.path, fields=fields)
        return _error_response(422, "ValidationError", "Invalid experiment request", details=fields)

    @staticmethod
    async def pydantic_validation_exception_handler(request: Request, exc: ValidationError) -> JSONResponse:
        # raised past the request layer, e.g. by SimulationSettings.updated
        fields = _field_errors(exc)
        logger.warning("settings_rejected", path=request.url.path, fields=fields)
        return _error_response(422, "ValidationError", "Invalid simulation settings", details=fields)

    @staticmethod
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        kind = type(exc).__name__ if isinstance(exc, SimulationError) else "InvalidRequest"
        logger.warning("domain_error", path=request.url.path, kind=kind, error=str(exc))
        return _error_response(400, kind, str(exc))

    @staticmethod
    async def general_exception_handler(request: Request, exc: Exception) -> JSONResponse:
        error_id = uuid.uuid4().hex[:12]
        logger.error("unexpected_error", error_id=error_id, path=request.url.path,
                     error=repr(exc), traceback=traceback.format_exc())
        if os.getenv("MFRIS_DEBUG", "false").lower() == "true":
            return _error_response(500, "InternalServerError", repr(exc), error_id=error_id,
                                   traceback=traceback.format_exc().splitlines())
        return _error_response(500, "InternalServerError", "Simulation service failed", error_id=error_id)

    @staticmethod
    def get_error_handlers() -> Dict[Any, Any]:
        return {
            HTTPException: ErrorHandler.http_exception_handler,
            RequestValidationError: ErrorHandler.validation_exception_handler,
            ValidationError: ErrorHandler.pydantic_validation_exception_handler,
            ValueError: ErrorHandler.value_error_handler,
            Exception: ErrorHandler.general_exception_handler,
        }
