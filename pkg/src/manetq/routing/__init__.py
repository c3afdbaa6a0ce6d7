"""Routing protocols: DSR, its queue/energy-aware extension and clustering."""

from . import cluster, dsr, nfpqr

__all__ = ["cluster", "dsr", "nfpqr"]
