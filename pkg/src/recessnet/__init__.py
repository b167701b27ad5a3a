"""Real-time recession forecasting with feed-forward and gated recurrent networks."""

__version__ = "0.1.0"
