"""Class balancing and classifier benchmarking for network intrusion data."""

__version__ = "0.1.0"
