"""features in plain text."""
