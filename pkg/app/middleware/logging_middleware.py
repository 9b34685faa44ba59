"""Middleware to log requests."""
import logging
import time

from fastapi import Request
from fastapi.logger import logger as fastapi_logger
from starlette.middleware.base import BaseHTTPMiddleware

from app.utils.settings import configure_logging

fastapi_logger.setLevel(logging.INFO)
configure_logging()
logger = logging.getLogger()


class LoggingMiddleware(BaseHTTPMiddleware):

    """Middleware to log requests with their status and duration."""

    async def dispatch(self, request: Request, call_next):
        """
        Log requests.

        :param request: The request.
        :param call_next: The next call.
        :return: The response.
        """
        logger.info(f"Request URL: {request.url} | Method: {request.method}")
        start = time.perf_counter()
        response = await call_next(request)
        logger.info(f"Status: {response.status_code} | {1000 * (time.perf_counter() - start):.1f} ms")
        return response
