"""Sampled growth curves shared by the counting and asymptotics modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LABELS = ("sphereArea", "ballVolume", "orbitCount")


@dataclass(frozen=True)
class GrowthSeries:
    """Samples ``(t, value)`` of s_t(x), b_t(x) or a_t(x, y).

    Orbit counts may be zero for small radii when x != y; the other labels
    must be strictly positive.
    """

    t: np.ndarray
    value: np.ndarray
    label: str

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.value, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "value", v)
        if self.label not in LABELS:
            raise ValueError(f"unknown series label {self.label!r}")
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("t and value must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if self.label == "orbitCount":
            if np.any(v < 0) or np.any(np.diff(v) < 0):
                raise ValueError("orbit counts must be nonnegative and nondecreasing")
        elif np.any(v <= 0):
            raise ValueError(f"{self.label} values must be positive")

    def __len__(self):
        return len(self.t)

    def window(self, t1, t2):
        keep = (self.t >= t1 - 1e-12) & (self.t <= t2 + 1e-12)
        return self.t[keep], self.value[keep]

    def samples(self):
        return [{"t": float(t), "value": float(v)} for t, v in zip(self.t, self.value)]
