"""Phase-noise-impaired 5G NR PDSCH link simulator."""

__version__ = "0.1.0"
