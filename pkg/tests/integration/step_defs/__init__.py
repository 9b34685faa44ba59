"""behavior tests package."""
