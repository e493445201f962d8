"""Model wrapping: a predict callable plus its input/output contract."""

from __future__ import annotations

import importlib.util
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

PROB_SUM_SLACK = 1e-3  # framework softmax outputs carry float noise


@dataclass(frozen=True)
class WrappedModel:
    """A classifier exposed to the protocol server.

    ``predict`` receives the raw row-major RGB bytes and the image dims and
    returns one probability per class. Outputs whose sum is within 1e-3 of 1
    are renormalized exactly; anything further off is rejected as a model bug.
    """

    predict: Callable[[bytes, int, int], Sequence[float]]
    num_classes: int
    height: int
    width: int

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.height < 1 or self.width < 1:
            raise ValueError("image dims must be positive")

    def classify_bytes(self, raw: bytes, height: int, width: int) -> list[float]:
        expected = self.height * self.width * 3
        if (height, width) != (self.height, self.width):
            raise ValueError(
                f"image dims {height}x{width} != model dims {self.height}x{self.width}"
            )
        if len(raw) != expected:
            raise ValueError(f"expected {expected} image bytes, got {len(raw)}")
        probs = [float(p) for p in self.predict(raw, height, width)]
        if len(probs) != self.num_classes:
            raise ValueError(f"model returned {len(probs)} probabilities, expected {self.num_classes}")
        if any(p < 0.0 for p in probs):
            raise ValueError(f"negative probability in model output: {probs}")
        total = sum(probs)
        if abs(total - 1.0) > PROB_SUM_SLACK:
            raise ValueError(f"model output sums to {total}, outside 1 +/- {PROB_SUM_SLACK}")
        return [p / total for p in probs]


def wrap_constant(probs: Sequence[float], height: int = 64, width: int = 64) -> WrappedModel:
    """Fixture model that answers the same vector for every image."""
    probs = [float(p) for p in probs]
    if abs(sum(probs) - 1.0) > PROB_SUM_SLACK:
        raise ValueError(f"constant probabilities sum to {sum(probs)}, not 1")
    frozen = [p / sum(probs) for p in probs]
    return WrappedModel(
        predict=lambda raw, h, w: list(frozen),
        num_classes=len(frozen),
        height=height,
        width=width,
    )


def load_model_spec(path: str | Path) -> WrappedModel:
    """Load a user model file: a Python module defining ``build_model()``.

    The function must return a WrappedModel; alternatively the module may
    expose a ready ``MODEL`` attribute.
    """
    path = Path(path)
    spec = importlib.util.spec_from_file_location(f"trojscan_adapter_model_{path.stem}", path)
    if spec is None or spec.loader is None:
        raise ValueError(f"cannot load model spec from {path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    if hasattr(module, "build_model"):
        model = module.build_model()
    elif hasattr(module, "MODEL"):
        model = module.MODEL
    else:
        raise ValueError(f"{path} defines neither build_model() nor MODEL")
    if not isinstance(model, WrappedModel):
        raise ValueError(f"{path} produced {type(model).__name__}, expected WrappedModel")
    return model
