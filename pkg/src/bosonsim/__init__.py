"""Forward model and analysis tools for bolometric superconducting near-field nanoscopy."""

__version__ = "0.1.0"
