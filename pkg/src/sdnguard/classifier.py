"""Multi-frequency traffic classifier.

Each input feature vector is decomposed into n+1 same-length frequency
branches (undecimated wavelet transform, a fixed non-trainable front-end).
Every branch owns an independent spatial/temporal pipeline: the branch is
reshaped row-major into a small 2-D map, passed through two ReLU
convolutions each followed by 2x2 max pooling and dropout, the pooled map
is read as a short sequence of channel vectors, and an LSTM reduces it to
a fixed-size embedding.  Branch embeddings are averaged, projected to
class scores by a shared dense layer, and normalized by softmax.

Training is mini-batch gradient descent on the mean squared error between
the softmax output and one-hot targets, with L2 weight decay.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError, DataValidationError, TrainingDivergedError
from .nn import (
    LSTM,
    Conv2D,
    Dropout,
    Dense,
    MaxPool2D,
    Softmax,
    load_params,
    mse_loss,
    save_params,
    sgd_step,
)
from .preprocess import labels_to_onehot
from .validation import check_feature_matrix
from .wavelets import decompose_matrix, filter_bank

DEFAULT_CLASSES = (
    "Normal",
    "DDoS",
    "DoS",
    "Probe",
    "Brute-Force-Attack",
    "Web-Attack",
    "BotNet",
)


@dataclass(frozen=True)
class ClassifierConfig:
    level: int = 3
    image_shape: tuple = (8, 6)
    conv_channels: tuple = (32, 64)
    dropout_rates: tuple = (0.2, 0.3)
    lstm_units: int = 128
    classes: tuple = DEFAULT_CLASSES
    learning_rate: float = 0.01
    l2: float = 1e-4
    batch_size: int = 8
    epochs: int = 100
    wavelet: str = "DB4"

    def __post_init__(self):
        if not 0 <= self.level <= 4:
            raise ConfigurationError(f"decomposition level must be 0..4, got {self.level}")
        h, w = self.image_shape
        if h < 4 or w < 2:
            raise ConfigurationError(f"image shape {self.image_shape} too small to pool twice")
        if len(self.classes) < 2:
            raise ConfigurationError("need at least two classes")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigurationError("invalid batch size or epoch count")

    @property
    def n_features(self):
        return self.image_shape[0] * self.image_shape[1]

    @property
    def n_branches(self):
        return self.level + 1

    def as_dict(self):
        return {
            "level": self.level,
            "image_shape": list(self.image_shape),
            "conv_channels": list(self.conv_channels),
            "dropout_rates": list(self.dropout_rates),
            "lstm_units": self.lstm_units,
            "classes": list(self.classes),
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "wavelet": self.wavelet,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            level=int(data["level"]),
            image_shape=tuple(data["image_shape"]),
            conv_channels=tuple(data["conv_channels"]),
            dropout_rates=tuple(data["dropout_rates"]),
            lstm_units=int(data["lstm_units"]),
            classes=tuple(data["classes"]),
            learning_rate=float(data["learning_rate"]),
            l2=float(data["l2"]),
            batch_size=int(data["batch_size"]),
            epochs=int(data["epochs"]),
            wavelet=str(data["wavelet"]),
        )


class _BranchLayers:
    """Shared stateless layer objects for one model configuration."""

    def __init__(self, config: ClassifierConfig):
        c1, c2 = config.conv_channels
        d1, d2 = config.dropout_rates
        h, w = config.image_shape
        self.conv1 = Conv2D(1, c1, name="conv1")
        self.pool1 = MaxPool2D(2, name="pool1")
        self.drop1 = Dropout(d1, name="drop1")
        self.conv2 = Conv2D(c1, c2, name="conv2")
        self.pool2 = MaxPool2D(2, name="pool2")
        self.drop2 = Dropout(d2, name="drop2")
        self.seq_len = (h // 2 // 2) * (w // 2 // 2)
        if self.seq_len < 1:
            raise ConfigurationError(f"image shape {config.image_shape} pools to nothing")
        self.lstm = LSTM(c2, config.lstm_units, name="lstm")


@dataclass
class MultiFrequencyModel:
    """Per-branch parameter sets plus the shared output projection."""

    config: ClassifierConfig
    params: dict  # {"branch{i}.conv1": {...}, ..., "projection": {...}}
    layers: _BranchLayers = field(repr=False, default=None)
    projection: Dense = field(repr=False, default=None)
    softmax: Softmax = field(repr=False, default=None)

    def branch_param_keys(self, index):
        return (
            f"branch{index}.conv1",
            f"branch{index}.conv2",
            f"branch{index}.lstm",
        )


def build_model(config: ClassifierConfig, seed: int) -> MultiFrequencyModel:
    """Independently seeded weights per branch plus the shared projection."""
    layers = _BranchLayers(config)
    projection = Dense(config.lstm_units, len(config.classes), name="projection")
    root = np.random.SeedSequence(seed)
    branch_seeds = root.spawn(config.n_branches + 1)
    params = {}
    for i in range(config.n_branches):
        sub = branch_seeds[i].spawn(3)
        params[f"branch{i}.conv1"] = layers.conv1.init_params(np.random.default_rng(sub[0]))
        params[f"branch{i}.conv2"] = layers.conv2.init_params(np.random.default_rng(sub[1]))
        params[f"branch{i}.lstm"] = layers.lstm.init_params(np.random.default_rng(sub[2]))
    params["projection"] = projection.init_params(
        np.random.default_rng(branch_seeds[-1])
    )
    return MultiFrequencyModel(
        config=config,
        params=params,
        layers=layers,
        projection=projection,
        softmax=Softmax(),
    )


def _ensure_layers(model: MultiFrequencyModel):
    if model.layers is None:
        model.layers = _BranchLayers(model.config)
    if model.projection is None:
        model.projection = Dense(
            model.config.lstm_units, len(model.config.classes), name="projection"
        )
    if model.softmax is None:
        model.softmax = Softmax()
    return model


def branch_forward(model, branch_index, subsequence, train=False, rng=None):
    """Run one frequency branch to its embedding.

    Accepts a single length-k sequence or an (N, k) batch; returns the
    embedding(s) with matching batch shape.
    """
    _ensure_layers(model)
    x = np.asarray(subsequence, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    k = model.config.n_features
    if x.shape[1] != k:
        raise DataValidationError(f"branch input must have {k} values, got {x.shape[1]}")
    z, _ = _branch_forward_cached(model, branch_index, x, train, rng)
    return z[0] if single else z


def _branch_forward_cached(model, index, x, train, rng):
    layers = model.layers
    h, w = model.config.image_shape
    p = model.params
    keys = model.branch_param_keys(index)
    image = x.reshape(len(x), h, w, 1)
    out1, c_conv1 = layers.conv1.forward(p[keys[0]], image, train)
    out2, c_pool1 = layers.pool1.forward({}, out1, train)
    out3, c_drop1 = layers.drop1.forward({}, out2, train, rng)
    out4, c_conv2 = layers.conv2.forward(p[keys[1]], out3, train)
    out5, c_pool2 = layers.pool2.forward({}, out4, train)
    out6, c_drop2 = layers.drop2.forward({}, out5, train, rng)
    n, ph, pw, ch = out6.shape
    seq = out6.reshape(n, ph * pw, ch)
    z, c_lstm = layers.lstm.forward(p[keys[2]], seq, train)
    cache = (c_conv1, c_pool1, c_drop1, c_conv2, c_pool2, c_drop2, out6.shape, c_lstm)
    return z, cache


def _branch_backward(model, index, cache, dz):
    layers = model.layers
    p = model.params
    keys = model.branch_param_keys(index)
    c_conv1, c_pool1, c_drop1, c_conv2, c_pool2, c_drop2, pooled_shape, c_lstm = cache
    dseq, g_lstm = layers.lstm.backward(p[keys[2]], c_lstm, dz)
    dpool2 = dseq.reshape(pooled_shape)
    ddrop2, _ = layers.drop2.backward({}, c_drop2, dpool2)
    dconv2_out, _ = layers.pool2.backward({}, c_pool2, ddrop2)
    ddrop1, g_conv2 = layers.conv2.backward(p[keys[1]], c_conv2, dconv2_out)
    dpool1, _ = layers.drop1.backward({}, c_drop1, ddrop1)
    dconv1_out, _ = layers.pool1.backward({}, c_pool1, dpool1)
    _, g_conv1 = layers.conv1.backward(p[keys[0]], c_conv1, dconv1_out)
    return {keys[0]: g_conv1, keys[1]: g_conv2, keys[2]: g_lstm}


def _forward_full(model, xdec, train=False, rng=None):
    """xdec: (N, m, k) decomposed batch -> (probs, caches)."""
    m = model.config.n_branches
    zs = []
    caches = []
    for i in range(m):
        z, cache = _branch_forward_cached(model, i, xdec[:, i, :], train, rng)
        zs.append(z)
        caches.append(cache)
    zbar = np.mean(zs, axis=0)
    logits, c_proj = model.projection.forward(model.params["projection"], zbar)
    probs, c_soft = model.softmax.forward({}, logits)
    return probs, (caches, c_proj, c_soft, m)


def _backward_full(model, cache, dprobs):
    caches, c_proj, c_soft, m = cache
    dlogits, _ = model.softmax.backward({}, c_soft, dprobs)
    dzbar, g_proj = model.projection.backward(model.params["projection"], c_proj, dlogits)
    grads = {"projection": g_proj}
    dz = dzbar / m
    for i in range(m):
        grads.update(_branch_backward(model, i, caches[i], dz))
    return grads


def _decompose(model, X):
    return decompose_matrix(X, model.config.level, filter_bank(model.config.wavelet))


def predict_proba_model(model, X):
    """Class probabilities for an (N, k) matrix of normalized features."""
    _ensure_layers(model)
    X = check_feature_matrix(X, model.config.n_features)
    probs, _ = _forward_full(model, _decompose(model, X), train=False)
    return probs


def predict_model(model, X):
    probs = predict_proba_model(model, X)
    idx = probs.argmax(axis=1)
    classes = np.array(model.config.classes, dtype=object)
    return classes[idx]


@dataclass
class TrainingHistory:
    losses: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)

    def stabilized(self, tail=10, tolerance=0.05):
        """True when the mean loss over the last ``tail`` epochs is within
        ``tolerance`` of the best epoch loss."""
        if len(self.losses) < tail:
            return False
        tail_mean = float(np.mean(self.losses[-tail:]))
        best = float(np.min(self.losses))
        return tail_mean <= best * (1.0 + tolerance) + 1e-12


def train_model(model, X, labels, seed, X_val=None, y_val=None, epochs=None):
    """Mini-batch SGD with seeded shuffling; returns the loss history.

    ``labels`` are class names; targets are one-hot rows in config order.
    """
    _ensure_layers(model)
    cfg = model.config
    X = check_feature_matrix(X, cfg.n_features)
    targets = labels_to_onehot(labels, cfg.classes)
    xdec = _decompose(model, X)
    n = len(X)
    if n == 0:
        raise DataValidationError("empty training set")
    epochs = cfg.epochs if epochs is None else epochs
    seq = np.random.SeedSequence(seed)
    shuffle_rng = np.random.default_rng(seq.spawn(1)[0])
    dropout_rng = np.random.default_rng(seq.spawn(1)[0])
    history = TrainingHistory()
    for epoch in range(epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            probs, cache = _forward_full(model, xdec[batch], train=True, rng=dropout_rng)
            loss, dprobs = mse_loss(probs, targets[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch + 1}, batch {start // cfg.batch_size}"
                )
            grads = _backward_full(model, cache, dprobs)
            model.params = sgd_step(
                model.params, grads, lr=cfg.learning_rate, l2=cfg.l2
            )
            total += loss * len(batch)
        history.losses.append(total / n)
        if X_val is not None and y_val is not None:
            pred = predict_model(model, X_val)
            history.val_accuracy.append(float(np.mean(pred == np.asarray(y_val))))
    return history


@dataclass
class FoldResult:
    fold: int
    accuracy: float
    n_validation: int


def cross_validate(X, labels, config: ClassifierConfig, k=10, seed=0, epochs=None):
    """k rounds of train/validate over disjoint folds; fresh seeded model
    per round."""
    from .preprocess import kfold

    labels = np.asarray(labels, dtype=object)
    folds = kfold(len(X), k=k, seed=seed)
    if min(len(f) for f in folds) < config.batch_size:
        raise ConfigurationError(
            f"smallest fold ({min(len(f) for f in folds)} rows) is below one "
            f"batch ({config.batch_size})"
        )
    results = []
    root = np.random.SeedSequence(seed)
    model_seeds = root.spawn(k)
    for i, fold in enumerate(folds):
        mask = np.ones(len(X), dtype=bool)
        mask[fold] = False
        model = build_model(config, seed=int(model_seeds[i].generate_state(1)[0]))
        train_model(model, X[mask], labels[mask], seed=seed + i, epochs=epochs)
        pred = predict_model(model, X[fold])
        acc = float(np.mean(pred == labels[fold]))
        results.append(FoldResult(fold=i, accuracy=acc, n_validation=len(fold)))
    accs = [r.accuracy for r in results]
    return results, float(np.mean(accs)), float(np.std(accs))


def save_model(model: MultiFrequencyModel, path, meta=None):
    extra = {"config": model.config.as_dict()}
    if meta:
        extra["meta"] = meta
    return save_params(model.params, path, extra=extra)


def load_model(path) -> MultiFrequencyModel:
    params, extra = load_params(path)
    if not extra or "config" not in extra:
        raise DataValidationError(f"{path}: checkpoint lacks a classifier config")
    config = ClassifierConfig.from_dict(extra["config"])
    model = MultiFrequencyModel(config=config, params=params)
    return _ensure_layers(model)


def write_predictions_csv(provenance, predictions, probabilities, path,
                          header_comment=None):
    probabilities = np.asarray(probabilities)
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        n_classes = probabilities.shape[1]
        writer.writerow(
            ["provenance", "predicted_class"] + [f"prob_{i}" for i in range(n_classes)]
        )
        for prov, pred, probs in zip(provenance, predictions, probabilities):
            writer.writerow([prov, pred] + [repr(float(p)) for p in probs])
    return path


class MultiFrequencyClassifier(BaseEstimator, ClassifierMixin):
    """Estimator facade over the functional model API.

    ``fit`` infers the class inventory from ``y`` (sorted order); use the
    functional API with an explicit ClassifierConfig to pin a class order.
    """

    def __init__(
        self,
        level=3,
        image_shape=(8, 6),
        conv_channels=(32, 64),
        dropout_rates=(0.2, 0.3),
        lstm_units=128,
        learning_rate=0.01,
        l2=1e-4,
        batch_size=8,
        epochs=100,
        wavelet="DB4",
        random_state=0,
    ):
        self.level = level
        self.image_shape = image_shape
        self.conv_channels = conv_channels
        self.dropout_rates = dropout_rates
        self.lstm_units = lstm_units
        self.learning_rate = learning_rate
        self.l2 = l2
        self.batch_size = batch_size
        self.epochs = epochs
        self.wavelet = wavelet
        self.random_state = random_state

    def _config(self, classes):
        return ClassifierConfig(
            level=self.level,
            image_shape=tuple(self.image_shape),
            conv_channels=tuple(self.conv_channels),
            dropout_rates=tuple(self.dropout_rates),
            lstm_units=self.lstm_units,
            classes=tuple(classes),
            learning_rate=self.learning_rate,
            l2=self.l2,
            batch_size=self.batch_size,
            epochs=self.epochs,
            wavelet=self.wavelet,
        )

    def fit(self, X, y):
        y = np.asarray(y, dtype=object)
        classes = sorted(set(y.tolist()))
        config = self._config(classes)
        self.model_ = build_model(config, seed=self.random_state)
        self.history_ = train_model(self.model_, X, y, seed=self.random_state)
        self.classes_ = np.array(classes, dtype=object)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("classifier is not fitted")

    def predict_proba(self, X):
        self._check_fitted()
        return predict_proba_model(self.model_, X)

    def predict(self, X):
        self._check_fitted()
        return predict_model(self.model_, X)
