"""mostyle: unpaired motion style transfer toolkit.

Data layer (BVH, keypoints, windowing), a content/style-disentangling
translator trained on labeled clips, a test-time transfer pipeline with
velocity warping and foot-contact cleanup, a spectral baseline, and
latent-space analysis utilities.
"""

from .skeleton import SkeletonTopology
from .motion import (
    PositionalMotion2D,
    PositionalMotion3D,
    RootTransform,
    RotationalMotion,
    local_joint_velocity,
    root_normalize,
    root_restore,
)
from .quat import hemisphere_align, normalize
from .kinematics import forward_kinematics
from .camera import BodyLandmarks, CameraParams, forward_direction, project, sample_cameras
from .dataio import (
    ClipWindow,
    DatasetManifest,
    MotionDataset,
    assemble_dataset,
    load_keypoints2d,
    load_manifest,
    split,
    window_clips,
)
from .bvh import parse_bvh, write_bvh
from .nets import (
    AdaINParams,
    Hyperparams,
    ModelParams,
    adain,
    decode,
    discriminate,
    encode_content,
    encode_style_2d,
    encode_style_3d,
    instance_norm,
    style_to_adain,
    translate,
)
from .losses import LossWeights
from .training import TrainConfig, fit, sample_batch, train_step
from .inference import (
    TransferOptions,
    detect_foot_contacts,
    fix_foot_contacts,
    foot_skate_metric,
    interpolate_styles,
    time_warp,
    transfer,
    velocity_factor,
)
from .spectral import SpectralPair, affine_conv_equivalence, spectral_transfer
from .analysis import CodeTable, cluster_metrics, export_codes, pca2

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
