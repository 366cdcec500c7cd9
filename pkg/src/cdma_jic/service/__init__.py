"""HTTP service wrapping the Monte Carlo harness."""

from cdma_jic.service.app import create_app

__all__ = ["create_app"]
