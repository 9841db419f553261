"""Record store."""
