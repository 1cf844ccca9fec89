"""Proof engine for first-order bi-intuitionistic logic over polytree sequents."""

__version__ = "0.1.0"
