"""Baseline humour rater: pooled features -> 5-class softmax regression.

Stands in for the original network at desk scale: per-clip audio features
are pooled to mean/std vectors (optionally concatenated with externally
computed text-embedding vectors) and classified by L2-regularized
multinomial logistic regression trained with full-batch gradient descent.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agreement import ConfusionMatrix, RatingTable, confusion, qwk
from .errors import LaughCorpusError, TrainingError
from .features import FeatureMatrix, read_features

logger = logging.getLogger(__name__)

N_CLASSES = 5

MODALITIES = ("audio", "text", "both")

MODEL_SCHEMA_VERSION = 1


@dataclass
class PooledExample:
    clip_id: str
    x: np.ndarray
    y: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if not np.isfinite(self.x).all():
            raise LaughCorpusError(f"clip {self.clip_id}: non-finite features")
        if self.y not in range(N_CLASSES):
            raise LaughCorpusError(
                f"clip {self.clip_id}: rating {self.y} outside 0..{N_CLASSES - 1}")


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass
class SoftmaxModel:
    weights: np.ndarray  # (n_classes, d)
    bias: np.ndarray  # (n_classes,)
    standardizer: Standardizer
    feature_layout: dict = field(default_factory=dict)


@dataclass
class TrainConfig:
    """Defaults give a non-increasing loss curve on standardized features;
    raise lr at your own risk (train() warns if the loss ends up higher
    than it started)."""

    lr: float = 0.1
    epochs: int = 2000
    l2: float = 1e-4
    seed: int = 0
    balanced: bool = False


@dataclass
class Prediction:
    probs: np.ndarray
    rating: int


@dataclass
class EvalResult:
    qwk: float
    accuracy: float
    confusion: ConfusionMatrix


def pool_features(matrix: FeatureMatrix) -> np.ndarray:
    """[per-dim mean | per-dim population std] over the real (unpadded) rows."""
    if matrix.n_frames_real < 1:
        raise LaughCorpusError("cannot pool a matrix with no real frames")
    real = matrix.data[:matrix.n_frames_real].astype(np.float64)
    return np.concatenate([real.mean(axis=0), real.std(axis=0)])


def load_text_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Read a clip_id -> vector JSON map; all vectors must share one width.

    Raises:
        LaughCorpusError: duplicate clip ids, NaN/Inf tokens, or
            inconsistent dimensions (the offending clip is named).
    """
    path = Path(path)

    def reject_constant(token):
        raise LaughCorpusError(f"{path}: non-finite token {token!r} in embeddings")

    def reject_duplicates(pairs):
        seen = set()
        for key, _ in pairs:
            if key in seen:
                raise LaughCorpusError(f"{path}: duplicate clip_id {key!r}")
            seen.add(key)
        return dict(pairs)

    try:
        obj = json.loads(path.read_text(encoding="utf-8"),
                         object_pairs_hook=reject_duplicates,
                         parse_constant=reject_constant)
    except json.JSONDecodeError as exc:
        raise LaughCorpusError(f"{path}: malformed embeddings JSON: {exc}") from exc
    if not isinstance(obj, dict) or not obj:
        raise LaughCorpusError(f"{path}: embeddings must be a non-empty object")

    out: dict[str, np.ndarray] = {}
    dim = None
    for clip_id, values in obj.items():
        vec = np.asarray(values, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise LaughCorpusError(
                f"{path}: clip {clip_id!r} embedding must be a flat array")
        if not np.isfinite(vec).all():
            raise LaughCorpusError(f"{path}: clip {clip_id!r} has non-finite values")
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise LaughCorpusError(
                f"{path}: clip {clip_id!r} has dimension {vec.size}, "
                f"expected {dim}")
        out[clip_id] = vec
    return out


def build_examples(manifest, features_dir: str | Path, modality: str = "audio",
                   embeddings: dict[str, np.ndarray] | None = None,
                   split: str | None = None) -> list[PooledExample]:
    """Assemble pooled examples for rated clips, in sorted clip-id order."""
    if modality not in MODALITIES:
        raise LaughCorpusError(f"modality {modality!r} not in {MODALITIES}")
    if modality in ("text", "both") and embeddings is None:
        raise LaughCorpusError(f"modality {modality!r} requires text embeddings")
    features_dir = Path(features_dir)
    examples = []
    for clip in sorted(manifest.clips, key=lambda c: c.id):
        if split is not None and clip.split != split:
            continue
        if clip.rating is None:
            raise LaughCorpusError(f"clip {clip.id} has no rating; score first")
        parts = []
        if modality in ("audio", "both"):
            parts.append(pool_features(read_features(features_dir / f"{clip.id}.lfx")))
        if modality in ("text", "both"):
            if clip.id not in embeddings:
                raise LaughCorpusError(f"no text embedding for clip {clip.id}")
            parts.append(embeddings[clip.id])
        examples.append(PooledExample(clip_id=clip.id,
                                      x=np.concatenate(parts), y=clip.rating))
    return examples


def _stack(examples: list[PooledExample]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([e.x for e in examples])
    y = np.array([e.y for e in examples], dtype=np.int64)
    return x, y


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _loss_and_grads(weights, bias, z, y, l2, sample_weights):
    """Weighted cross-entropy with l2*sum(W^2); returns (loss, dW, db)."""
    probs = _softmax_rows(z @ weights.T + bias)
    total = sample_weights.sum()
    picked = probs[np.arange(y.size), y]
    loss = -float(sample_weights @ np.log(np.maximum(picked, 1e-300))) / total
    loss += l2 * float((weights ** 2).sum())
    delta = probs.copy()
    delta[np.arange(y.size), y] -= 1.0
    delta *= sample_weights[:, None]
    grad_w = delta.T @ z / total + 2.0 * l2 * weights
    grad_b = delta.sum(axis=0) / total
    return loss, grad_w, grad_b


def train(examples: list[PooledExample],
          config: TrainConfig | None = None) -> SoftmaxModel:
    """Full-batch gradient descent from zero weights; deterministic.

    Raises:
        TrainingError: no examples, or loss became non-finite (the epoch
            index is reported).
    """
    if config is None:
        config = TrainConfig()
    if not examples:
        raise TrainingError("no training examples")
    x, y = _stack(examples)
    present = set(y.tolist())
    absent = sorted(set(range(N_CLASSES)) - present)
    if absent:
        logger.warning("training set has no examples for classes %s", absent)

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    standardizer = Standardizer(mean=mean, std=std)
    z = (x - mean) / std

    if config.balanced:
        counts = np.bincount(y, minlength=N_CLASSES).astype(np.float64)
        per_class = np.where(counts > 0, y.size / (N_CLASSES * np.maximum(counts, 1)), 0.0)
        sample_weights = per_class[y]
    else:
        sample_weights = np.ones(y.size)

    # seed is reserved for reporting-order shuffles; full-batch descent
    # from zero init is already deterministic
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(y.size)
    z, y, sample_weights = z[order], y[order], sample_weights[order]

    weights = np.zeros((N_CLASSES, x.shape[1]))
    bias = np.zeros(N_CLASSES)
    initial_loss = None
    loss = None
    for epoch in range(config.epochs):
        loss, grad_w, grad_b = _loss_and_grads(
            weights, bias, z, y, config.l2, sample_weights)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        if initial_loss is None:
            initial_loss = loss
        weights -= config.lr * grad_w
        bias -= config.lr * grad_b
    if initial_loss is not None and loss is not None and loss > initial_loss:
        logger.warning("final loss %.6g exceeds initial %.6g; lower the "
                       "learning rate", loss, initial_loss)

    return SoftmaxModel(
        weights=weights, bias=bias, standardizer=standardizer,
        feature_layout={"n_dims": int(x.shape[1])},
    )


def predict(model: SoftmaxModel, x: np.ndarray) -> Prediction:
    """Class probabilities and the argmax rating (lowest index wins ties)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.weights.shape[1],):
        raise LaughCorpusError(
            f"feature dimension {x.shape} does not match model "
            f"({model.weights.shape[1]},)")
    z = model.standardizer.apply(x)
    logits = model.weights @ z + model.bias
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    return Prediction(probs=probs, rating=int(np.argmax(probs)))


def gradient_check(model: SoftmaxModel, examples: list[PooledExample],
                   l2: float = 1e-4, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Evaluated on the training objective at the model's current parameters;
    with no examples the objective is the regularizer alone.
    """
    if examples:
        x, y = _stack(examples)
        z = np.stack([model.standardizer.apply(row) for row in x])
        sample_weights = np.ones(y.size)
    else:
        z = np.zeros((0, model.weights.shape[1]))
        y = np.zeros(0, dtype=np.int64)
        sample_weights = np.ones(0)

    # numeric side runs end-to-end in extended precision so
    # finite-difference noise stays well under the 1e-5 gate; the analytic
    # side under test is the ordinary float64 path
    z_ld = z.astype(np.longdouble)
    l2_ld = np.longdouble(l2)

    def objective(weights, bias):
        w = weights.astype(np.longdouble)
        reg = l2_ld * (w ** 2).sum()
        if y.size == 0:
            return reg
        logits = z_ld @ w.T + bias.astype(np.longdouble)
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        picked = log_probs[np.arange(y.size), y]
        return -picked.mean() + reg

    if y.size == 0:
        analytic_w = 2.0 * l2 * model.weights
        analytic_b = np.zeros_like(model.bias)
    else:
        _, analytic_w, analytic_b = _loss_and_grads(
            model.weights, model.bias, z, y, l2, sample_weights)

    worst = 0.0
    for which, analytic in (("w", analytic_w), ("b", analytic_b)):
        base = model.weights if which == "w" else model.bias

        def at(idx, value):
            perturbed = base.copy()
            perturbed[idx] = value
            if which == "w":
                return objective(perturbed, model.bias)
            return objective(model.weights, perturbed)

        eps = np.longdouble(epsilon)
        for idx in np.ndindex(base.shape):
            theta = base[idx]
            # five-point central difference (Richardson-extrapolated)
            numeric = float(
                (8.0 * (at(idx, theta + eps) - at(idx, theta - eps))
                 - (at(idx, theta + 2 * eps) - at(idx, theta - 2 * eps)))
                / (12.0 * eps))
            a = float(analytic[idx])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst


def evaluate(model: SoftmaxModel, examples: list[PooledExample]) -> EvalResult:
    """QWK, accuracy and confusion of predictions against the labels."""
    if not examples:
        raise LaughCorpusError("cannot evaluate on an empty example list")
    labels = np.array([e.y for e in examples], dtype=np.int64)
    preds = np.array([predict(model, e.x).rating for e in examples],
                     dtype=np.int64)
    table = RatingTable(ratings=np.stack([labels, preds], axis=1),
                        n_categories=N_CLASSES)
    return EvalResult(
        qwk=qwk(labels, preds, n_categories=N_CLASSES),
        accuracy=float((labels == preds).mean()),
        confusion=confusion(table, 0, 1),
    )


def save_model(model: SoftmaxModel, path: str | Path) -> None:
    obj = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
        "feature_layout": model.feature_layout,
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path: str | Path) -> SoftmaxModel:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LaughCorpusError(f"{path}: malformed model JSON: {exc}") from exc
    if obj.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise LaughCorpusError(
            f"{path}: model schema_version {obj.get('schema_version')} "
            f"not supported (supported: {MODEL_SCHEMA_VERSION})")
    return SoftmaxModel(
        weights=np.asarray(obj["weights"], dtype=np.float64),
        bias=np.asarray(obj["bias"], dtype=np.float64),
        standardizer=Standardizer(
            mean=np.asarray(obj["standardizer"]["mean"], dtype=np.float64),
            std=np.asarray(obj["standardizer"]["std"], dtype=np.float64),
        ),
        feature_layout=obj.get("feature_layout", {}),
    )
