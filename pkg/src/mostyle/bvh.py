"""BVH (HIERARCHY/MOTION) reading and writing.

The parser accepts rotation channels in any of the six Euler orders and
optional position channels on any joint (only the root's feed the
translation track). The writer always emits a fixed Zrotation Yrotation
Xrotation order with six decimal places, so parse -> write -> parse is the
identity on offsets and per-frame rotation matrices.
"""

from __future__ import annotations

import re

import numpy as np

from . import quat
from .motion import RotationalMotion
from .skeleton import SkeletonTopology


class BvhParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_ROTATION_CHANNELS = {"Xrotation": "X", "Yrotation": "Y", "Zrotation": "Z"}
_POSITION_CHANNELS = {"Xposition": 0, "Yposition": 1, "Zposition": 2}

_FOOT_PATTERNS = (
    re.compile(r"^(left|l)[_\s]?(foot|ankle)", re.IGNORECASE),
    re.compile(r"^(right|r)[_\s]?(foot|ankle)", re.IGNORECASE),
)


def guess_foot_joints(names) -> tuple[int | None, int | None]:
    """Best-effort left/right foot joint lookup by common naming."""
    left = right = None
    for i, name in enumerate(names):
        if left is None and _FOOT_PATTERNS[0].match(name):
            left = i
        if right is None and _FOOT_PATTERNS[1].match(name):
            right = i
    return left, right


class _Lines:
    def __init__(self, text: str):
        self.raw = text.splitlines()
        self.pos = 0

    def next(self) -> tuple[int, list[str]]:
        while self.pos < len(self.raw):
            line = self.raw[self.pos].strip()
            self.pos += 1
            if line:
                return self.pos, line.split()
        return self.pos, []

    def peek(self) -> list[str]:
        save = self.pos
        _, tokens = self.next()
        self.pos = save
        return tokens


def parse_bvh(text: str) -> tuple[SkeletonTopology, RotationalMotion]:
    """Parse a BVH document into a skeleton and a quaternion motion.

    Euler channels are converted honoring each joint's declared order; the
    resulting per-joint quaternion tracks are hemisphere-aligned.
    """
    lines = _Lines(text)
    line_no, tokens = lines.next()
    if tokens[:1] != ["HIERARCHY"]:
        raise BvhParseError(line_no, "expected HIERARCHY")

    names: list[str] = []
    parents: list[int] = []
    offsets: list[list[float]] = []
    channels: list[list[str]] = []
    end_offsets: dict[int, np.ndarray] = {}

    def parse_joint(parent: int):
        line_no, tokens = lines.next()
        if not tokens or tokens[0] not in ("ROOT", "JOINT"):
            raise BvhParseError(line_no, f"expected ROOT/JOINT, got {' '.join(tokens) or 'EOF'}")
        if tokens[0] == "ROOT" and parent != -1:
            raise BvhParseError(line_no, "ROOT nested inside a joint")
        if tokens[0] == "JOINT" and parent == -1:
            raise BvhParseError(line_no, "JOINT outside of ROOT")
        name = " ".join(tokens[1:]) or f"joint{len(names)}"
        index = len(names)
        names.append(name)
        parents.append(parent)
        offsets.append([0.0, 0.0, 0.0])
        channels.append([])

        line_no, tokens = lines.next()
        if tokens != ["{"]:
            raise BvhParseError(line_no, "expected '{'")
        while True:
            line_no, tokens = lines.next()
            if not tokens:
                raise BvhParseError(line_no, "unbalanced braces: unexpected end of file")
            head = tokens[0]
            if head == "OFFSET":
                if len(tokens) != 4:
                    raise BvhParseError(line_no, "OFFSET needs 3 values")
                offsets[index] = [float(v) for v in tokens[1:4]]
            elif head == "CHANNELS":
                count = int(tokens[1])
                chans = tokens[2 : 2 + count]
                if len(chans) != count:
                    raise BvhParseError(line_no, "CHANNELS count mismatch")
                for ch in chans:
                    if ch not in _ROTATION_CHANNELS and ch not in _POSITION_CHANNELS:
                        raise BvhParseError(line_no, f"unknown channel name {ch!r}")
                channels[index] = chans
            elif head in ("JOINT", "ROOT"):
                lines.pos -= 1
                parse_joint(index)
            elif head == "End":
                line_no2, tokens2 = lines.next()
                if tokens2 != ["{"]:
                    raise BvhParseError(line_no2, "expected '{' after End Site")
                line_no3, tokens3 = lines.next()
                if tokens3[:1] != ["OFFSET"] or len(tokens3) != 4:
                    raise BvhParseError(line_no3, "End Site needs an OFFSET")
                end_offsets[index] = np.array([float(v) for v in tokens3[1:4]])
                line_no4, tokens4 = lines.next()
                if tokens4 != ["}"]:
                    raise BvhParseError(line_no4, "unbalanced braces in End Site")
            elif head == "}":
                return
            else:
                raise BvhParseError(line_no, f"unexpected token {head!r}")

    parse_joint(-1)

    line_no, tokens = lines.next()
    if tokens[:1] != ["MOTION"]:
        raise BvhParseError(line_no, "expected MOTION after hierarchy")
    line_no, tokens = lines.next()
    if tokens[:1] != ["Frames:"]:
        raise BvhParseError(line_no, "expected 'Frames:'")
    num_frames = int(tokens[1])
    line_no, tokens = lines.next()
    if tokens[:2] != ["Frame", "Time:"]:
        raise BvhParseError(line_no, "expected 'Frame Time:'")
    frame_time = float(tokens[2])
    if frame_time <= 0:
        raise BvhParseError(line_no, "frame time must be positive")

    total_channels = sum(len(c) for c in channels)
    values = np.zeros((num_frames, total_channels))
    for f in range(num_frames):
        line_no, tokens = lines.next()
        if not tokens:
            raise BvhParseError(line_no, f"frame-count mismatch: expected {num_frames} frames, found {f}")
        if len(tokens) != total_channels:
            raise BvhParseError(
                line_no, f"frame {f} has {len(tokens)} values, expected {total_channels}"
            )
        values[f] = [float(v) for v in tokens]
    extra_no, extra = lines.next()
    if extra:
        raise BvhParseError(extra_no, f"frame-count mismatch: more than {num_frames} frame rows")

    num_joints = len(names)
    rotations = np.zeros((num_frames, num_joints, 4))
    rotations[:, :, 0] = 1.0
    root_translation = np.zeros((num_frames, 3))
    col = 0
    for j in range(num_joints):
        rot_order = ""
        rot_cols = []
        for ch in channels[j]:
            if ch in _ROTATION_CHANNELS:
                rot_order += _ROTATION_CHANNELS[ch]
                rot_cols.append(col)
            else:
                if j == 0:
                    root_translation[:, _POSITION_CHANNELS[ch]] = values[:, col]
            col += 1
        if rot_order:
            angles = values[:, rot_cols]
            rotations[:, j, :] = quat.hemisphere_align(quat.from_euler(angles, rot_order))

    skel = SkeletonTopology(
        names=tuple(names),
        parents=np.asarray(parents, dtype=np.int64),
        offsets=np.asarray(offsets),
        end_offsets=end_offsets,
    )
    left, right = guess_foot_joints(names)
    if left is not None or right is not None:
        skel = SkeletonTopology(
            names=skel.names,
            parents=skel.parents,
            offsets=skel.offsets,
            end_offsets=skel.end_offsets,
            left_foot=left,
            right_foot=right,
        )
    motion = RotationalMotion(
        rotations=rotations,
        root_translation=root_translation,
        fps=1.0 / frame_time,
    )
    return skel, motion


def write_bvh(skel: SkeletonTopology, motion: RotationalMotion) -> str:
    """Serialize to BVH text: root gets position + ZYX rotation channels,
    every other joint ZYX rotation only; numbers use 6 decimal places."""
    if motion.num_joints != skel.num_joints:
        raise ValueError("motion joint count does not match skeleton")
    children: list[list[int]] = [[] for _ in range(skel.num_joints)]
    for j in range(1, skel.num_joints):
        children[skel.parents[j]].append(j)

    out: list[str] = ["HIERARCHY"]

    def emit(j: int, depth: int):
        indent = "  " * depth
        keyword = "ROOT" if j == 0 else "JOINT"
        out.append(f"{indent}{keyword} {skel.names[j]}")
        out.append(f"{indent}{{")
        off = skel.offsets[j]
        out.append(f"{indent}  OFFSET {off[0]:.6f} {off[1]:.6f} {off[2]:.6f}")
        if j == 0:
            out.append(
                f"{indent}  CHANNELS 6 Xposition Yposition Zposition"
                " Zrotation Yrotation Xrotation"
            )
        else:
            out.append(f"{indent}  CHANNELS 3 Zrotation Yrotation Xrotation")
        if children[j]:
            for c in children[j]:
                emit(c, depth + 1)
        else:
            end = skel.end_offsets.get(j, np.zeros(3))
            out.append(f"{indent}  End Site")
            out.append(f"{indent}  {{")
            out.append(f"{indent}    OFFSET {end[0]:.6f} {end[1]:.6f} {end[2]:.6f}")
            out.append(f"{indent}  }}")
        out.append(f"{indent}}}")

    emit(0, 0)
    out.append("MOTION")
    out.append(f"Frames: {motion.num_frames}")
    out.append(f"Frame Time: {1.0 / motion.fps:.8f}")
    eulers = quat.to_euler_zyx(motion.rotations)  # (T, J, 3) in Z, Y, X order
    for f in range(motion.num_frames):
        row = [f"{v:.6f}" for v in motion.root_translation[f]]
        for j in range(skel.num_joints):
            row.extend(f"{v:.6f}" for v in eulers[f, j])
        out.append(" ".join(row))
    return "\n".join(out) + "\n"
