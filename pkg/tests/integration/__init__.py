"""step defs for integration tests."""
