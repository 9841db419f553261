"""Figure CSV export and run manifests."""
