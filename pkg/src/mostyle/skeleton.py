"""Skeleton topology: the kinematic prior shared by FK, IK and BVH I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SkeletonTopology:
    """Joint hierarchy with per-joint rest offsets.

    parents[j] is the index of joint j's parent and must be < j; the single
    root has parent -1 at index 0. Offsets are in the length units of the
    source file. End sites are terminal offsets that carry no rotation
    channel (kept for BVH round-trips and height estimates).
    """

    names: tuple[str, ...]
    parents: np.ndarray          # (J,) int
    offsets: np.ndarray          # (J, 3) float
    end_offsets: dict[int, np.ndarray] = field(default_factory=dict)
    left_foot: int | None = None
    right_foot: int | None = None

    def __post_init__(self):
        parents = np.asarray(self.parents, dtype=np.int64)
        offsets = np.asarray(self.offsets, dtype=np.float64)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "offsets", offsets)
        if parents.ndim != 1 or offsets.shape != (parents.shape[0], 3):
            raise ValueError("parents must be (J,), offsets (J, 3)")
        if parents[0] != -1 or np.any(parents[1:] < 0):
            raise ValueError("exactly one root, at index 0")
        if np.any(parents[1:] >= np.arange(1, len(parents))):
            raise ValueError("parents must be topologically ordered (parent < child)")
        for foot in (self.left_foot, self.right_foot):
            if foot is not None and not 0 <= foot < len(parents):
                raise ValueError(f"foot index {foot} out of range")

    @property
    def num_joints(self) -> int:
        return len(self.parents)

    def foot_indices(self) -> tuple[int, int]:
        if self.left_foot is None or self.right_foot is None:
            raise ValueError("skeleton has no foot joints defined")
        return self.left_foot, self.right_foot

    def chain_to_root(self, joint: int) -> list[int]:
        """Indices from `joint` up to and including the root."""
        chain = [joint]
        while self.parents[chain[-1]] != -1:
            chain.append(int(self.parents[chain[-1]]))
        return chain

    def rest_positions(self) -> np.ndarray:
        """Joint positions of the rest pose (identity rotations), root at origin."""
        pos = np.zeros((self.num_joints, 3))
        for j in range(1, self.num_joints):
            pos[j] = pos[self.parents[j]] + self.offsets[j]
        return pos

    def height(self) -> float:
        """Vertical (Y) extent of the rest pose, end sites included."""
        pos = self.rest_positions()
        ys = [pos[:, 1].min(), pos[:, 1].max()]
        for j, off in self.end_offsets.items():
            ys.append(pos[j, 1] + float(np.asarray(off)[1]))
        return float(max(ys) - min(ys))
