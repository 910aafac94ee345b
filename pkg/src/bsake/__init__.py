"""Bagged stacked-autoencoder kernel ELM forecasting for monthly series."""

__version__ = "0.1.0"
