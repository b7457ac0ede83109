"""Personalized pedestrian travel-time estimation: naive ETAs, crossing delays,
feature encoding, a regression model suite and a synthetic data generator."""

__version__ = "0.1.0"
