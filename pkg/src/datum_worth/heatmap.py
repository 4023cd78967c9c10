"""Class-activation heatmaps: weighted sums of spatial feature maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NonFiniteFeature, ValidationError


@dataclass(frozen=True)
class FeatureMapStack:
    """K feature maps of identical h x w shape, stored as a K x h x w array."""

    maps: np.ndarray
    metadata: str = ""

    @classmethod
    def from_array(cls, maps, metadata: str = "") -> "FeatureMapStack":
        arr = np.asarray(maps, dtype=np.float64)
        if arr.ndim != 3:
            raise ValidationError(
                f"a feature-map stack must be K x h x w, got ndim={arr.ndim}"
            )
        if arr.shape[0] < 1:
            raise ValidationError("a stack needs at least one feature map")
        if not np.isfinite(arr).all():
            raise NonFiniteFeature("feature maps must be finite")
        arr.flags.writeable = False
        return cls(maps=arr, metadata=metadata)

    @property
    def k(self) -> int:
        return int(self.maps.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.maps.shape[1]), int(self.maps.shape[2])


@dataclass(frozen=True)
class ClassWeights:
    weights: np.ndarray

    @classmethod
    def from_array(cls, weights) -> "ClassWeights":
        arr = np.asarray(weights, dtype=np.float64).reshape(-1)
        if not np.isfinite(arr).all():
            raise NonFiniteFeature("class weights must be finite")
        arr.flags.writeable = False
        return cls(weights=arr)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Heatmap:
    grid: np.ndarray
    normalized: bool = False


def compute_heatmap(stack: FeatureMapStack, weights: ClassWeights) -> Heatmap:
    """Elementwise weighted sum of the K feature maps."""
    if len(weights) != stack.k:
        raise LengthMismatch(
            f"{len(weights)} weights for {stack.k} feature maps"
        )
    grid = np.tensordot(weights.weights, stack.maps, axes=1)
    grid.flags.writeable = False
    return Heatmap(grid=grid, normalized=False)


def normalize_heatmap(heatmap: Heatmap) -> Heatmap:
    """Min-max rescale to [0, 1]; a constant grid becomes all 0.5."""
    lo = float(heatmap.grid.min())
    hi = float(heatmap.grid.max())
    if hi == lo:
        grid = np.full_like(heatmap.grid, 0.5)
    else:
        grid = (heatmap.grid - lo) / (hi - lo)
    grid.flags.writeable = False
    return Heatmap(grid=grid, normalized=True)
