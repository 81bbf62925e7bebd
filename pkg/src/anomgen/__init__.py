"""anomgen: deterministic parallel generator for labeled synthetic
time-series anomaly datasets, plus scoring and plotting tools."""

__version__ = "0.1.0"
