"""Utils module initialization."""
