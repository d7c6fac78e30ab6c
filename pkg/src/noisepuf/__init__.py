"""Switching-noise PUF and anomaly-detection simulator."""
