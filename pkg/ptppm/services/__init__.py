"""I/O and orchestration services around the core algorithms."""
