"""utils package for the application."""
