"""Packet-level MANET simulator: DSR, queue-aware NFPQR and clustered NFPQR."""

__version__ = "0.1.0"
