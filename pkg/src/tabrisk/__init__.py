"""tabrisk: imbalanced tabular risk prediction with synthetic-minority
augmentation, probability calibration, and edge-case stress testing."""

__version__ = "0.1.0"
