"""routers for the main fastapi endpoints."""
