"""Echo model: one-hot over whichever color channel dominates the image.

Class 0 = red-dominant, 1 = green-dominant, 2 = blue-dominant (ties resolve
to the lowest channel index). Useful as a deterministic cross-implementation
reference: any client can recompute the expected answer from the raw bytes.
"""

from trojscan_adapter import WrappedModel

HEIGHT = WIDTH = 32


def _predict(raw: bytes, height: int, width: int) -> list[float]:
    sums = [0, 0, 0]
    for index, byte in enumerate(raw):
        sums[index % 3] += byte
    winner = sums.index(max(sums))
    return [1.0 if c == winner else 0.0 for c in range(3)]


def build_model() -> WrappedModel:
    return WrappedModel(predict=_predict, num_classes=3, height=HEIGHT, width=WIDTH)
