from orim.gcnn.group import Group, GroupKind
from orim.gcnn.layers import (
    ChannelAffine,
    Dense,
    Flatten,
    GroupConv,
    OrimTransition,
    ReLU,
    SoftmaxCrossEntropy,
    SpatialMaxPool,
    ThetaMaxProject,
    group_conv,
    lift_conv,
    orim_transition,
    theta_max_project,
)
from orim.gcnn.model import Architecture, Network, Variant, load_checkpoint, save_checkpoint

__all__ = [
    "Group", "GroupKind", "ChannelAffine", "Dense", "Flatten", "GroupConv", "OrimTransition",
    "ReLU", "SoftmaxCrossEntropy", "SpatialMaxPool", "ThetaMaxProject", "group_conv",
    "lift_conv", "orim_transition", "theta_max_project", "Architecture", "Network", "Variant",
    "load_checkpoint", "save_checkpoint",
]
