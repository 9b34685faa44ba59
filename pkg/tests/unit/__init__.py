"""unit test package."""
