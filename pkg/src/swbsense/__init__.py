"""Well-being sensing from social-media user records."""

__version__ = "0.1.0"
