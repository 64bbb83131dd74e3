"""Fixed-step two-speed powershift simulator with exact clutch engagement torques."""

__version__ = "0.1.0"
