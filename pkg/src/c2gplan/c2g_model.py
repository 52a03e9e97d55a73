"""Cost-to-go regressor: a rectifier MLP trained per workspace.

The network maps a normalized configuration pair (4 + 4 inputs) through three
256-unit hidden layers to a single cost output. Forward, backward and the
adaptive-moment optimizer are implemented directly on numpy arrays; training
is deterministic for a fixed seed. Parameters are float32 so the on-disk
format round-trips bit-exactly.

The model record carries a workspace identifier so an external weight
generator could later supply parameters per workspace; training here is
always per-workspace.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import NormalizedConfig

LAYER_SIZES = (8, 256, 256, 256, 1)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class C2GModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    workspace_id: str = ""
    rho: float = 1.0
    extent: float = 1.0

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "C2GModel":
        return C2GModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.workspace_id,
            self.rho,
            self.extent,
        )


@dataclass
class TrainConfig:
    # constant 2e-3 beat both lower rates and decay schedules on held-out
    # planning quality; the loss surface rewards sustained large steps here
    learning_rate: float = 2e-3
    batch_size: int = 256
    epochs: int = 200
    validation_fraction: float = 0.1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    augment_symmetric: bool = True

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 0.5:
            raise ValueError("validation_fraction must be in (0, 0.5)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainReport:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = -1
    final_rmse: float = math.nan  # in cost units

    def save_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("epoch,train_mse,val_mse\n")
            for e, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
                f.write(f"{e},{tr!r},{va!r}\n")


def init_model(
    seed: int,
    workspace_id: str = "",
    rho: float = 1.0,
    extent: float = 1.0,
    layer_sizes: tuple[int, ...] = LAYER_SIZES,
    dtype=np.float32,
) -> C2GModel:
    """Deterministic fan-in-scaled initialization, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        scale = math.sqrt(2.0 / fan_in)
        weights.append((rng.standard_normal((fan_in, fan_out)) * scale).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return C2GModel(weights, biases, workspace_id, rho, extent)


def _forward(model: C2GModel, x: np.ndarray):
    """Activations per layer; hidden layers rectified, output linear."""
    acts = [x]
    a = x
    n_layers = len(model.weights)
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        a = np.maximum(z, 0.0) if i < n_layers - 1 else z
        acts.append(a)
    return acts


def predict_batch(model: C2GModel, x: np.ndarray) -> np.ndarray:
    """Predicted costs (in cost units, clamped at 0) for (n, 8) normalized inputs."""
    x = np.asarray(x, dtype=model.weights[0].dtype)
    if not np.isfinite(x).all():
        raise ValueError("non-finite network input")
    raw = _forward(model, x)[-1][:, 0]
    return np.maximum(raw, 0.0).astype(float) * model.extent


def predict(model: C2GModel, s: NormalizedConfig, t: NormalizedConfig) -> float:
    x = np.concatenate([s.as_array(), t.as_array()])[None, :]
    return float(predict_batch(model, x)[0])


def loss_and_gradients(model: C2GModel, x: np.ndarray, y: np.ndarray):
    """MSE over the batch plus exact gradients for every weight and bias.

    Targets are in normalized cost units; no output clamp is applied here so
    gradients stay clean.
    """
    x = np.asarray(x, dtype=model.weights[0].dtype)
    y = np.asarray(y, dtype=model.weights[0].dtype)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    acts = _forward(model, x)
    pred = acts[-1][:, 0]
    err = pred - y
    n = x.shape[0]
    mse = float(np.mean(err.astype(np.float64) ** 2))

    d_weights = [None] * len(model.weights)
    d_biases = [None] * len(model.biases)
    delta = (2.0 / n) * err[:, None].astype(model.weights[0].dtype)
    for i in range(len(model.weights) - 1, -1, -1):
        d_weights[i] = acts[i].T @ delta
        d_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return mse, (d_weights, d_biases)


def _dataset_matrix(dataset, extent: float):
    """Stack samples into (n, 8) normalized inputs and (n,) normalized targets."""
    n = len(dataset.samples)
    x = np.empty((n, 8))
    y = np.empty(n)
    for i, smp in enumerate(dataset.samples):
        x[i, 0] = smp.s.x / extent
        x[i, 1] = smp.s.y / extent
        x[i, 2] = math.cos(smp.s.theta)
        x[i, 3] = math.sin(smp.s.theta)
        x[i, 4] = smp.t.x / extent
        x[i, 5] = smp.t.y / extent
        x[i, 6] = math.cos(smp.t.theta)
        x[i, 7] = math.sin(smp.t.theta)
        y[i] = smp.cost / extent
    return x, y


def train(dataset, cfg: TrainConfig) -> tuple[C2GModel, TrainReport]:
    """Mini-batch training with the adaptive-moment optimizer.

    Returns the parameters with the best validation loss. The cost metric is
    symmetric for this car, so each pair is also trained in swapped order
    unless augmentation is disabled.
    """
    if len(dataset.samples) < 1000:
        raise ValueError(f"dataset too small: {len(dataset.samples)} samples (need >= 1000)")
    extent = dataset.meta["extent"]
    x, y = _dataset_matrix(dataset, extent)

    rng = np.random.default_rng(cfg.seed)
    n = x.shape[0]
    perm = rng.permutation(n)
    n_val = max(1, int(round(cfg.validation_fraction * n)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    x_val, y_val = x[val_idx], y[val_idx]
    x_tr, y_tr = x[train_idx], y[train_idx]
    if cfg.augment_symmetric:
        x_tr = np.vstack([x_tr, np.hstack([x_tr[:, 4:], x_tr[:, :4]])])
        y_tr = np.concatenate([y_tr, y_tr])

    model = init_model(cfg.seed, dataset.meta.get("workspace_id", ""),
                       dataset.meta.get("rho", 1.0), extent)
    dtype = model.weights[0].dtype
    x_tr32, y_tr32 = x_tr.astype(dtype), y_tr.astype(dtype)
    x_val32 = x_val.astype(dtype)

    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]

    report = TrainReport()
    best = model.copy()
    best_val = math.inf
    step_count = 0
    n_train = x_tr32.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, n_train, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            mse, (dw, db) = loss_and_gradients(model, x_tr32[idx], y_tr32[idx])
            # targets are normalized, so any sane loss is O(1); treat runaway
            # growth the same as overflow
            if not math.isfinite(mse) or mse > 1e6:
                raise TrainingDivergedError(f"training diverged at epoch {epoch} (mse={mse:.3g})")
            epoch_loss += mse
            n_batches += 1
            step_count += 1
            bc1 = 1.0 - cfg.beta1 ** step_count
            bc2 = 1.0 - cfg.beta2 ** step_count
            for params, grads, ms, vs in (
                (model.weights, dw, m_w, v_w),
                (model.biases, db, m_b, v_b),
            ):
                for p, g, m, v in zip(params, grads, ms, vs):
                    m *= cfg.beta1
                    m += (1.0 - cfg.beta1) * g
                    v *= cfg.beta2
                    v += (1.0 - cfg.beta2) * g * g
                    p -= (lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)).astype(p.dtype)
        val_pred = _forward(model, x_val32)[-1][:, 0]
        val_mse = float(np.mean((val_pred.astype(np.float64) - y_val) ** 2))
        if not math.isfinite(val_mse):
            raise TrainingDivergedError(f"validation loss became non-finite at epoch {epoch}")
        report.train_mse.append(epoch_loss / max(n_batches, 1))
        report.val_mse.append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best = model.copy()
            report.best_epoch = epoch
    report.final_rmse = math.sqrt(best_val) * extent
    return best, report


_MAGIC = b"C2GM"
FORMAT_VERSION = 1


def save_model(model: C2GModel, path) -> None:
    """Versioned header + flat little-endian float32 blob (W1, b1, W2, b2, ...)."""
    header = json.dumps(
        {
            "format_version": FORMAT_VERSION,
            "layer_sizes": list(model.layer_sizes),
            "workspace_id": model.workspace_id,
            "rho": model.rho,
            "extent": model.extent,
        }
    ).encode()
    blob = b"".join(
        np.ascontiguousarray(arr, dtype="<f4").tobytes()
        for w, b in zip(model.weights, model.biases)
        for arr in (w, b)
    )
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(blob)


def load_model(path) -> C2GModel:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError("not a model file (bad magic)")
        (hlen,) = struct.unpack("<I", f.read(4))
        try:
            header = json.loads(f.read(hlen).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"corrupted model header: {exc}") from exc
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {header.get('format_version')}")
        sizes = header["layer_sizes"]
        blob = f.read()
    expected = sum(
        fi * fo + fo for fi, fo in zip(sizes[:-1], sizes[1:])
    )
    if len(blob) != expected * 4:
        raise ValueError(
            f"parameter block shape mismatch: expected {expected} float32 values, "
            f"got {len(blob) // 4}"
        )
    flat = np.frombuffer(blob, dtype="<f4")
    weights, biases = [], []
    off = 0
    for fi, fo in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[off:off + fi * fo].reshape(fi, fo).copy())
        off += fi * fo
        biases.append(flat[off:off + fo].copy())
        off += fo
    return C2GModel(weights, biases, header["workspace_id"], header["rho"], header["extent"])
