"""Linear softmax probe for judging feature quality, plus classification metrics.

Training follows a plain SGD recipe: momentum, weight decay, per-epoch cosine
annealing, cross-entropy loss, early stopping on validation loss with the
best parameters restored.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np


class ProbeDivergenceError(FloatingPointError):
    def __init__(self, epoch: int):
        super().__init__(f"probe loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class ProbeConfig:
    learning_rate: float = 0.2
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 128
    max_epochs: int = 200
    early_stop_patience: int = 20
    cosine: bool = True
    seed: int = 0
    val_fraction: float = 0.2

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1 or not 0 <= self.early_stop_patience <= self.max_epochs:
            raise ValueError("need max_epochs >= 1 and 0 <= patience <= max_epochs")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass
class ProbeModel:
    weight: np.ndarray  # (classes, dim)
    bias: np.ndarray  # (classes,)
    mean: np.ndarray  # per-feature input centring
    scale: np.ndarray  # per-feature input scaling
    history: list = field(default_factory=list)
    train_indices: np.ndarray | None = None
    val_indices: np.ndarray | None = None

    @property
    def n_classes(self) -> int:
        return self.weight.shape[0]

    def logits(self, X) -> np.ndarray:
        Z = (flatten(X) - self.mean) / self.scale
        return Z @ self.weight.T + self.bias

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)


def flatten(features) -> np.ndarray:
    """Stack feature tensors (or arrays) into an ``(n, dim)`` float64 matrix."""
    if isinstance(features, np.ndarray):
        arr = features
    else:
        arr = np.stack([np.asarray(getattr(f, "data", f)) for f in features])
    return arr.reshape(arr.shape[0], -1).astype(np.float64)


def cosine_lr(base: float, epoch: int, total: int) -> float:
    return base * (1.0 + math.cos(math.pi * epoch / total)) / 2.0


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(W, b, X, y) -> float:
    z = X @ W.T + b
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())


def loss_and_grad(W, b, X, y):
    """Mean cross-entropy and its gradients with respect to ``W`` and ``b``."""
    n = len(y)
    p = softmax(X @ W.T + b)
    loss = float(-np.log(np.clip(p[np.arange(n), y], 1e-300, None)).mean())
    p[np.arange(n), y] -= 1.0
    p /= n
    return loss, p.T @ X, p.sum(axis=0)


def stratified_split(labels, val_fraction: float, rng: np.random.Generator):
    labels = np.asarray(labels)
    train, val = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_val = int(round(val_fraction * len(idx)))
        val.extend(idx[:n_val])
        train.extend(idx[n_val:])
    return np.sort(np.asarray(train)), np.sort(np.asarray(val))


def sgd_step(params, grads, bufs, lr, momentum, weight_decay):
    for p, g, v in zip(params, grads, bufs):
        g = g + weight_decay * p
        v *= momentum
        v += g
        p -= lr * v


def train_probe(features, labels, config: ProbeConfig = ProbeConfig()) -> ProbeModel:
    X = flatten(features)
    y = np.asarray(labels, dtype=np.int64)
    if len(X) != len(y):
        raise ValueError("features and labels differ in length")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("probe training needs at least two classes")
    n_classes = int(y.max()) + 1
    rng = np.random.default_rng(config.seed)
    tr, va = stratified_split(y, config.val_fraction, rng)

    # centre and scale so every input vector has roughly unit norm
    mean = X[tr].mean(axis=0)
    std = X[tr].std(axis=0)
    std[std == 0] = 1.0
    scale = std * math.sqrt(X.shape[1])
    Z = (X - mean) / scale
    Ztr, ytr, Zva, yva = Z[tr], y[tr], Z[va], y[va]

    W = np.zeros((n_classes, X.shape[1]))
    b = np.zeros(n_classes)
    bufs = [np.zeros_like(W), np.zeros_like(b)]
    history = [{
        "epoch": 0,
        "lr": config.learning_rate,
        "train_loss": cross_entropy(W, b, Ztr, ytr),
        "val_loss": cross_entropy(W, b, Zva, yva),
    }]
    best = (history[0]["val_loss"], W.copy(), b.copy())
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        lr = cosine_lr(config.learning_rate, epoch - 1, config.max_epochs) if config.cosine \
            else config.learning_rate
        order = rng.permutation(len(ytr))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, gW, gb = loss_and_grad(W, b, Ztr[batch], ytr[batch])
            if not math.isfinite(loss):
                raise ProbeDivergenceError(epoch)
            losses.append(loss * len(batch))
            sgd_step((W, b), (gW, gb), bufs, lr, config.momentum, config.weight_decay)
        val_loss = cross_entropy(W, b, Zva, yva)
        if not (math.isfinite(val_loss) and np.all(np.isfinite(W))):
            raise ProbeDivergenceError(epoch)
        history.append({
            "epoch": epoch,
            "lr": lr,
            "train_loss": sum(losses) / len(ytr),
            "val_loss": val_loss,
            "val_accuracy": float(np.mean(np.argmax(Zva @ W.T + b, axis=1) == yva)),
        })
        if val_loss < best[0]:
            best = (val_loss, W.copy(), b.copy())
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break
    return ProbeModel(best[1], best[2], mean, scale, history, tr, va)


@dataclass
class Metrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("confusion", "precision", "recall", "f1"):
            d[key] = np.asarray(d[key]).tolist()
        return d


def confusion_matrix(true, pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(true), np.asarray(pred)), 1)
    return cm


def metrics_from_confusion(cm) -> Metrics:
    """Per-class precision, recall and F1 from ``cm[true, predicted]``, macro-averaged.

    Undefined ratios (no predicted or no actual positives) count as 0.
    """
    cm = np.asarray(cm, dtype=np.int64)
    total = cm.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    actual = cm.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(actual > 0, tp / actual, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return Metrics(
        accuracy=float(tp.sum() / total),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        confusion=cm,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def metrics_from_labels(true, pred, n_classes: int | None = None) -> Metrics:
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if true.shape != pred.shape:
        raise ValueError("true and predicted labels differ in length")
    if true.size == 0:
        raise ValueError("no instances to evaluate")
    if n_classes is None:
        n_classes = int(max(true.max(), pred.max())) + 1
    return metrics_from_confusion(confusion_matrix(true, pred, n_classes))


def evaluate(model: ProbeModel, features, labels) -> Metrics:
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0:
        raise ValueError("no instances to evaluate")
    return metrics_from_labels(y, model.predict(features), model.n_classes)
