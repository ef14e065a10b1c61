"""FastAPI service wrapping the design library."""
