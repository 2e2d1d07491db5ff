"""oddforge: scenario-based ODD validation harness for rail-scene segmentation."""

__version__ = "0.1.0"
