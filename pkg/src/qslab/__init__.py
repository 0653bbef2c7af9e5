"""Frequency-space laboratory: dyadic frames, modulation norms, restricted
convolution measurements, and a windowed Duhamel solver probe."""

__version__ = "0.1.0"
