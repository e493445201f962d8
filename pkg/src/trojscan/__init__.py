"""Black-box trojan scanning for image classifiers.

Two sequential detection stages: a square-patch trigger sweep over the input
space, then per-class probing with a fixed bank of global filter transforms.
Ships with a deterministic synthetic model fleet for end-to-end evaluation.
"""

__version__ = "0.1.0"
