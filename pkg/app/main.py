"""main application entry point."""
import uvicorn
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app import __version__
from app.middleware.logging_middleware import LoggingMiddleware
from app.routers import constant, law, partition, schemas, tail
from app.utils.errors import InvalidInputError, WeylExitError

app = FastAPI(
    title="weyl-exit",
    description="Exit times of drifted Brownian particles from the Weyl chamber: stable partitions, "
    "the asymptotic law of the first collision time, survival probabilities and the constant C.",
    version=__version__,
    license_info={"name": "BSD3"},
)
app.include_router(partition.router)
app.include_router(law.router)
app.include_router(tail.router)
app.include_router(constant.router)
app.include_router(schemas.router)


@app.exception_handler(WeylExitError)
async def weyl_exit_error_handler(request: Request, exc: WeylExitError):
    """Malformed input is a 422; capability and numerical diagnostics are a 400 naming the error class."""
    status_code = 422 if isinstance(exc, InvalidInputError) else 400
    return JSONResponse(status_code=status_code, content={"detail": str(exc), "error": type(exc).__name__})


# Logging
app.add_middleware(LoggingMiddleware)
# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

if __name__ == "__main__":
    uvicorn.run("main:app", host="127.0.0.1", port=8080, log_level="info", reload=True)
