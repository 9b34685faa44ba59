"""middleware for main fastapi."""
