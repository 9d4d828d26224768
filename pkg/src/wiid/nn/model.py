"""Sequential network container, the full-size and reduced presets, and the model file format."""
from __future__ import annotations

import copy
import json
import struct
from pathlib import Path

import numpy as np

from ..features import feature_batch, network_input
from ..signals import NUM_CLASSES, SNAPSHOT_LEN
from .layers import Layer, make_layer

INPUT_SHAPE = (1, 2, SNAPSHOT_LEN)
TABLE1_FLAT_SIZE = 126_976

DTYPES = {"float32": np.float32, "float64": np.float64}


def _stack(conv1: int, conv2: int, dense: int, dropout: float, conv2_kernel=(2, 3)) -> list[dict]:
    return [
        {"kind": "conv", "filters": conv1, "kernel": [1, 3]},
        {"kind": "relu"},
        {"kind": "conv", "filters": conv2, "kernel": list(conv2_kernel)},
        {"kind": "relu"},
        {"kind": "dropout", "p": dropout},
        {"kind": "flatten"},
        {"kind": "dense", "units": dense},
        {"kind": "relu"},
        {"kind": "dropout", "p": dropout},
        {"kind": "dense", "units": NUM_CLASSES},
        {"kind": "sigmoid"},
    ]


def table1_config(strict_caption: bool = False, dtype: str = "float32") -> dict:
    """The full-size network: 64 and 1024 feature maps, 128 dense units, 15 sigmoid outputs.

    The second convolution spans both rows (2 x 3) so that the flattened size
    is 1024 * 124 = 126,976. ``strict_caption`` keeps a 1 x 3 kernel instead,
    which flattens to 1024 * 2 * 124.
    """
    cfg = {
        "name": "table1" + ("-strict" if strict_caption else ""),
        "input_shape": list(INPUT_SHAPE),
        "layers": _stack(64, 1024, 128, 0.6, (1, 3) if strict_caption else (2, 3)),
        "dtype": dtype,
        "preprocessing": {"normalize": True, "centered": True},
    }
    if not strict_caption:
        cfg["expect"] = {"flat_size": TABLE1_FLAT_SIZE, "output_size": NUM_CLASSES}
    return cfg


def reduced_config(dtype: str = "float32", dropout: float = 0.6) -> dict:
    """Desk-scale variant: 16 and 128 feature maps, 32 dense units."""
    return {
        "name": "reduced",
        "input_shape": list(INPUT_SHAPE),
        "layers": _stack(16, 128, 32, dropout),
        "dtype": dtype,
        "preprocessing": {"normalize": True, "centered": True},
        "expect": {"flat_size": 128 * 124, "output_size": NUM_CLASSES},
    }


class NetworkModel:
    def __init__(self, config: dict, layers: list[Layer], log: list[dict] | None = None):
        self.config = config
        self.layers = layers
        self.log = list(log or [])

    # construction helpers -------------------------------------------------

    @property
    def dtype(self):
        return DTYPES[self.config.get("dtype", "float32")]

    @property
    def head(self) -> str:
        return self.layers[-1].kind

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.layers[-1].output_shape

    @property
    def flat_size(self) -> int | None:
        for layer in self.layers:
            if layer.kind == "flatten":
                return layer.output_shape[0]
        return None

    @property
    def param_layers(self) -> list[Layer]:
        return [layer for layer in self.layers if layer.kind in ("conv", "dense")]

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.param_layers for p in layer.params]

    @property
    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.param_layers for g in layer.grads]

    @property
    def initialized(self) -> bool:
        return all(p is not None for p in self.params)

    def set_params(self, tensors: list[np.ndarray]) -> None:
        it = iter(tensors)
        for layer in self.param_layers:
            new = []
            for old in layer.params:
                t = next(it)
                if old is not None and old.shape != t.shape:
                    raise ValueError(f"tensor shape {t.shape} does not match {old.shape}")
                new.append(np.array(t, dtype=self.dtype))
            layer.params = new

    def param_shapes(self) -> list[tuple[int, ...]]:
        shapes = []
        for layer in self.param_layers:
            if layer.kind == "conv":
                c = layer.input_shape[0]
                shapes += [(layer.filters, c, *layer.kernel), (layer.filters,)]
            else:
                shapes += [(layer.units, layer.input_shape[0]), (layer.units,)]
        return shapes

    # passes ---------------------------------------------------------------

    def forward(self, x: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        if not self.initialized:
            raise ValueError("model has no weights; build it with a seed or load one")
        if x.shape[1:] != tuple(self.config["input_shape"]):
            raise ValueError(f"input shape {x.shape[1:]} does not match {self.config['input_shape']}")
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, dout: np.ndarray, skip_head: bool = False) -> np.ndarray:
        layers = self.layers[:-1] if skip_head else self.layers
        for layer in reversed(layers):
            dout = layer.backward(dout)
        return dout

    def features(self, samples: np.ndarray) -> np.ndarray:
        pre = self.config.get("preprocessing", {})
        feats = feature_batch(samples, normalize=pre.get("normalize", True),
                              centered=pre.get("centered", True), dtype=self.dtype)
        return network_input(feats)

    def predict_inputs(self, inputs: np.ndarray, batch_size: int = 512) -> np.ndarray:
        out = [self.forward(inputs[i:i + batch_size], train=False)
               for i in range(0, len(inputs), batch_size)]
        if not out:
            return np.zeros((0, *self.output_shape), dtype=self.dtype)
        return np.concatenate(out)

    def predict_batch(self, samples: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Scores of shape (n, 15) for a (n, 128) stack of snapshots."""
        return self.predict_inputs(self.features(np.asarray(samples)), batch_size)

    def predict(self, snapshot: np.ndarray) -> np.ndarray:
        """Per-class scores in [0, 1] for one snapshot, dropout disabled."""
        return self.predict_batch(np.asarray(snapshot)[None, :])[0]


def _init_scheme(layers: list[Layer], i: int) -> str:
    for later in layers[i + 1:]:
        if later.kind == "relu":
            return "he"
        if later.kind in ("sigmoid", "softmax", "conv", "dense"):
            return "glorot"
    return "glorot"


def build_model(config: dict, seed: int | None = None) -> NetworkModel:
    """Shape-check ``config`` end to end; draw weights when ``seed`` is given."""
    config = copy.deepcopy(config)
    if config.get("dtype", "float32") not in DTYPES:
        raise ValueError(f"unsupported dtype {config.get('dtype')!r}")
    layers = [make_layer(spec) for spec in config["layers"]]
    shape = tuple(config["input_shape"])
    for layer in layers:
        try:
            shape = layer.build(shape)
        except ValueError as e:
            raise ValueError(f"layer {layer.spec()} rejects input shape {shape}: {e}") from None
    model = NetworkModel(config, layers)
    expect = config.get("expect", {})
    if "flat_size" in expect and model.flat_size != expect["flat_size"]:
        raise ValueError(f"flattened size {model.flat_size} != expected {expect['flat_size']}")
    if "output_size" in expect and shape != (expect["output_size"],):
        raise ValueError(f"output shape {shape} != expected ({expect['output_size']},)")
    if seed is not None:
        rng = np.random.default_rng(seed)
        for i, layer in enumerate(layers):
            layer.init_params(rng, model.dtype, _init_scheme(layers, i))
        config["init_seed"] = int(seed)
    return model


# --------------------------------------------------------------------------
# file format

MAGIC = b"WIIM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBI")


class ModelFormatError(Exception):
    pass


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def model_bytes(model: NetworkModel) -> bytes:
    if not model.initialized:
        raise ValueError("refusing to save a model without weights")
    precision = 64 if model.dtype is np.float64 else 32
    dt = np.dtype("<f8" if precision == 64 else "<f4")
    tensors = [np.ascontiguousarray(p, dtype=dt) for p in model.params]
    meta = _canonical({"config": model.config, "log": model.log,
                       "tensors": [list(t.shape) for t in tensors]})
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, precision, len(meta)), meta]
    parts += [t.tobytes() for t in tensors]
    return b"".join(parts)


def save_model(model: NetworkModel, path: str | Path) -> None:
    Path(path).write_bytes(model_bytes(model))


def load_model(path: str | Path) -> NetworkModel:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ModelFormatError(f"{path}: truncated header")
    magic, version, precision, meta_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported model format version {version}")
    if precision not in (32, 64):
        raise ModelFormatError(f"{path}: unknown precision {precision}")
    start = _HEADER.size + meta_len
    if len(raw) < start:
        raise ModelFormatError(f"{path}: truncated metadata")
    try:
        meta = json.loads(raw[_HEADER.size:start])
    except ValueError as e:
        raise ModelFormatError(f"{path}: unreadable metadata: {e}") from None
    dt = np.dtype("<f8" if precision == 64 else "<f4")
    shapes = [tuple(s) for s in meta["tensors"]]
    need = start + sum(int(np.prod(s)) for s in shapes) * dt.itemsize
    if len(raw) != need:
        raise ModelFormatError(f"{path}: {len(raw)} bytes, expected {need} (truncated or padded)")
    model = build_model(meta["config"])
    if shapes != model.param_shapes():
        raise ModelFormatError(f"{path}: tensor shapes do not match the stored config")
    tensors, off = [], start
    for s in shapes:
        n = int(np.prod(s))
        tensors.append(np.frombuffer(raw, dtype=dt, count=n, offset=off).reshape(s))
        off += n * dt.itemsize
    model.set_params(tensors)
    model.log = meta["log"]
    return model
