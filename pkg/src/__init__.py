"""Attack analytics for demand-controlled smart-home HVAC."""

__version__ = "0.1.0"
