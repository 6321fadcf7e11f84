"""Desk-scale G-CNN trunk with interchangeable heads, and checkpoint I/O."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from orim.basis import MomentSpec
from orim.gcnn.group import Group
from orim.gcnn.layers import (
    ChannelAffine,
    Dense,
    Flatten,
    GroupConv,
    OrimTransition,
    ReLU,
    SpatialMaxPool,
    ThetaMaxProject,
)

CHECKPOINT_SCHEMA = "orim/1"


class Variant(enum.Enum):
    GCNN_ORIM = "gcnn-orim"
    GCNN_FLATTEN = "gcnn-flatten"
    CNN_FLATTEN = "cnn-flatten"


@dataclass
class Architecture:
    variant: str = Variant.GCNN_ORIM.value
    group: str = "p4m"
    channels: int = 10
    family: str = "pzm"
    p_max: int = 5
    central: bool = False
    input_size: int = 32
    n_classes: int = 10
    seed: int = 0

    @property
    def spec(self) -> MomentSpec:
        return MomentSpec(self.family, self.p_max)


# conv layers per stage; a 2x2 pool follows every stage but the last
STAGES = (1, 2, 2, 1)


class Network:
    """Trunk of six group convolutions (each followed by a shared per-channel
    affine and ReLU) with pooling down to ``input_size / 8``, then a head.
    """

    def __init__(self, arch: Architecture, dtype=np.float32):
        self.arch = arch
        self.dtype = dtype
        variant = Variant(arch.variant)
        group = Group("z2" if variant is Variant.CNN_FLATTEN else arch.group)
        rng = np.random.default_rng(arch.seed)
        C = arch.channels
        trunk = []
        first = True
        for stage, n_conv in enumerate(STAGES):
            for _ in range(n_conv):
                trunk.append(GroupConv(group, 1 if first else C, C, 3, lifting=first,
                                       rng=rng, dtype=dtype))
                trunk.append(ChannelAffine(C, dtype))
                trunk.append(ReLU())
                first = False
            if stage < len(STAGES) - 1:
                trunk.append(SpatialMaxPool())
        side = arch.input_size // 2 ** (len(STAGES) - 1)
        if variant is Variant.GCNN_ORIM:
            transition = OrimTransition(arch.spec, side, central=arch.central)
            head = [transition, Dense(C * transition.n_pairs, arch.n_classes, rng, dtype)]
        elif variant is Variant.GCNN_FLATTEN:
            head = [ThetaMaxProject(), Flatten(), Dense(side * side * C, arch.n_classes, rng, dtype)]
        else:
            head = [Flatten(), Dense(side * side * group.order * C, arch.n_classes, rng, dtype)]
        self.group = group
        self.trunk = trunk
        self.head = head
        self.layers = trunk + head

    def forward(self, images, upto=None):
        """``images`` is ``(N, H, W)``; returns logits ``(N, n_classes)``.

        With ``upto=i`` the activation after layer ``i`` is returned instead.
        """
        x = np.asarray(images, dtype=self.dtype)[:, :, :, None, None]
        for i, layer in enumerate(self.layers):
            x = layer.forward(x)
            if upto is not None and i == upto:
                return x
        return x

    __call__ = forward

    def backward(self, dlogits):
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def parameters(self):
        """``(layer, name, array)`` triples in declaration order."""
        return [(layer, name, arr) for layer in self.layers for name, arr in layer.parameters()]

    def n_parameters(self) -> int:
        return sum(arr.size for _, _, arr in self.parameters())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([arr.ravel().astype(np.float64) for _, _, arr in self.parameters()])

    def set_flat(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        pos = 0
        for layer, name, arr in self.parameters():
            n = arr.size
            setattr(layer, name, flat[pos:pos + n].reshape(arr.shape).astype(self.dtype))
            pos += n
        if pos != flat.size:
            raise ValueError(f"parameter blob holds {flat.size} values, model needs {pos}")

    def predict(self, images, batch_size=256):
        out = []
        for lo in range(0, len(images), batch_size):
            out.append(self.forward(images[lo:lo + batch_size]).astype(np.float64))
        return np.concatenate(out) if out else np.zeros((0, self.arch.n_classes))


def save_checkpoint(model: Network, directory, extra=None):
    """Write ``model.json`` (manifest) and ``params.bin`` (little-endian f64)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    shapes = [[f"{type(layer).__name__}.{name}", list(arr.shape)]
              for layer, name, arr in model.parameters()]
    manifest = {
        "schema": CHECKPOINT_SCHEMA,
        "architecture": asdict(model.arch),
        "dtype": np.dtype(model.dtype).name,
        "parameters": shapes,
        "n_parameters": model.n_parameters(),
        "blob": "params.bin",
    }
    if extra:
        manifest.update(extra)
    (directory / "model.json").write_text(json.dumps(manifest, indent=2))
    (directory / "params.bin").write_bytes(model.get_flat().astype("<f8").tobytes())


def load_checkpoint(directory) -> Network:
    directory = Path(directory)
    manifest = json.loads((directory / "model.json").read_text())
    model = Network(Architecture(**manifest["architecture"]), np.dtype(manifest.get("dtype", "float32")))
    blob = np.frombuffer((directory / manifest.get("blob", "params.bin")).read_bytes(), dtype="<f8")
    model.set_flat(blob)
    return model
