"""Monte Carlo experiment and its statistics."""
