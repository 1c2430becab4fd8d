"""Browser-fingerprint analytics and authentication toolkit."""

__version__ = "0.1.0"
