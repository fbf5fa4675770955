"""Forward kinematics over a skeleton hierarchy."""

from __future__ import annotations

import numpy as np

from . import backend
from .motion import PositionalMotion3D, RotationalMotion
from .skeleton import SkeletonTopology


def forward_kinematics(
    skel: SkeletonTopology,
    motion: RotationalMotion,
    include_root_translation: bool = True,
) -> PositionalMotion3D:
    """Joint positions p_j = p_parent + R_parent_global @ offset_j.

    With include_root_translation off, the root stays at the origin.
    """
    if motion.num_joints != skel.num_joints:
        raise ValueError(
            f"motion has {motion.num_joints} joints, skeleton has {skel.num_joints}"
        )
    rot = motion.rotations[None]  # add batch axis
    pos, _ = backend.fk_forward(rot, skel.offsets, skel.parents)
    pos = pos[0]
    if include_root_translation:
        pos = pos + motion.root_translation[:, None, :]
    return PositionalMotion3D(positions=pos, fps=motion.fps)


def global_rotations(skel: SkeletonTopology, motion: RotationalMotion) -> np.ndarray:
    """Per-joint global rotation matrices, (T, J, 3, 3)."""
    if motion.num_joints != skel.num_joints:
        raise ValueError("joint count mismatch")
    _, glob = backend.fk_forward(motion.rotations[None], skel.offsets, skel.parents)
    return glob[0]
