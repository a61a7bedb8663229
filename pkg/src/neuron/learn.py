"""User-defined metric pipeline: record labeled band-power sessions, train
small models, predict continuously in real time, and validate with accuracy
plus Welch's t-test.

Model kinds are deliberately minimal: logistic regression and k-nearest
neighbours for categorical labels, a one-hidden-layer MLP for continuous
labels.  Training is full-batch gradient descent with step halving, which
keeps the recorded loss history monotone and the result bit-reproducible for
a fixed (dataset, spec, seed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np
from scipy.special import betainc, expit

from .datatree import DataTree
from .errors import (BadFeature, DegenerateLabels, DegenerateVariance,
                     InsufficientData, ShapeMismatch)

MODEL_FORMAT_VERSION = 1


@dataclass
class Dataset:
    features: np.ndarray            # (n, d) float64
    labels: np.ndarray              # (n,) int for categorical, float otherwise
    categorical: bool
    feature_names: tuple[str, ...] = ()
    class_names: tuple[str, ...] = ()
    sessions: tuple[str, ...] = ()  # optional per-row session id

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-D")
        self.labels = np.asarray(self.labels)
        if len(self.labels) != len(self.features):
            raise ValueError("row/label count mismatch")

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "logreg" | "knn" | "mlp"
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("logreg", "knn", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        hp = dict(self.hyperparameters)
        if self.kind == "knn" and hp.get("k", 5) < 1:
            raise ValueError("k must be >= 1")
        if hp.get("learning_rate", 0.1) <= 0:
            raise ValueError("learning rate must be > 0")
        object.__setattr__(self, "hyperparameters", hp)


@dataclass
class TrainedModel:
    spec: ModelSpec
    feature_dim: int
    mean: np.ndarray
    std: np.ndarray
    parameters: dict
    loss_history: list[float] = field(default_factory=list)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass
class ValidationReport:
    accuracy: float
    threshold: float
    t_stat: float
    df: float
    p_value: float
    n_train: int
    n_val: int
    same_session_split: bool = False

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"


# --- recording -------------------------------------------------------------

def record(
    stream: Iterable[tuple[DataTree, object]],
    feature_names: Sequence[str] | None = None,
) -> tuple[np.ndarray, list]:
    """Collect one feature row per tree; rows with drifting shape are skipped.

    Returns (features, labels).  Use :func:`build_dataset` or the CSV writers
    to finish the job.
    """
    rows: list[list[float]] = []
    labels: list = []
    expected_shape = None
    skipped = 0
    for tree, label in stream:
        shape = tree.shape()
        if expected_shape is None:
            expected_shape = shape
        elif shape != expected_shape:
            skipped += 1
            continue
        rows.append(tree.flatten())
        labels.append(label)
    features = np.asarray(rows, dtype=np.float64).reshape(len(rows), -1)
    record.last_skipped = skipped  # type: ignore[attr-defined]
    return features, labels


def build_dataset(features: np.ndarray, labels: Sequence, categorical: bool,
                  feature_names: Sequence[str] = (),
                  sessions: Sequence[str] = ()) -> Dataset:
    if categorical:
        class_names = tuple(sorted({str(l) for l in labels}))
        ids = np.array([class_names.index(str(l)) for l in labels], dtype=np.int64)
        return Dataset(features, ids, True, tuple(feature_names), class_names,
                       tuple(sessions))
    return Dataset(features, np.asarray(labels, dtype=np.float64), False,
                   tuple(feature_names), (), tuple(sessions))


def write_categorical_csvs(out_dir: FsPath | str, per_class: dict[str, np.ndarray],
                           feature_names: Sequence[str]) -> list[FsPath]:
    """One <class>.csv per class, feature columns only."""
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for cls, rows in sorted(per_class.items()):
        path = out_dir / f"{cls}.csv"
        with path.open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(feature_names)
            w.writerows(np.asarray(rows).tolist())
        written.append(path)
    return written


def write_continuous_csv(path: FsPath | str, features: np.ndarray,
                         labels: Sequence[float],
                         feature_names: Sequence[str]) -> FsPath:
    """Single file, label column trailing the features."""
    path = FsPath(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(feature_names) + ["label"])
        for row, label in zip(np.asarray(features).tolist(), labels):
            w.writerow(row + [label])
    return path


def load_categorical_csvs(paths: Sequence[FsPath | str]) -> Dataset:
    features, labels, names = [], [], None
    for path in sorted(FsPath(p) for p in paths):
        cls = path.stem
        with path.open(newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader)
            if names is None:
                names = header
            elif header != names:
                raise ShapeMismatch(f"{path}: header differs across class files")
            for row in reader:
                features.append([float(v) for v in row])
                labels.append(cls)
    if not features:
        raise InsufficientData("no rows in any class file")
    return build_dataset(np.asarray(features), labels, True, tuple(names or ()))


def load_continuous_csv(path: FsPath | str) -> Dataset:
    with FsPath(path).open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise InsufficientData(f"{path}: no data rows")
    arr = np.asarray(rows)
    return build_dataset(arr[:, :-1], arr[:, -1], False, tuple(header[:-1]))


# --- splitting ---------------------------------------------------------------

def split(ds: Dataset, train_fraction: float, seed: int,
          by_session: bool = False) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive, seed-reproducible split; stratified by class when
    categorical, or grouped by session id when ``by_session``."""
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be in (0, 1)")
    if ds.n < 5:
        raise InsufficientData(f"need >= 5 rows to split, got {ds.n}")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    if by_session:
        if not ds.sessions:
            raise InsufficientData("by_session split needs session ids")
        names = sorted(set(ds.sessions))
        shuffled = list(names)
        rng.shuffle(shuffled)
        n_train_sessions = max(1, min(len(names) - 1, round(train_fraction * len(names))))
        train_sessions = set(shuffled[:n_train_sessions])
        train_idx = [i for i, s in enumerate(ds.sessions) if s in train_sessions]
    elif ds.categorical:
        for cls in np.unique(ds.labels):
            idx = np.flatnonzero(ds.labels == cls)
            rng.shuffle(idx)
            k = int(round(train_fraction * len(idx)))
            train_idx.extend(idx[:k].tolist())
    else:
        idx = np.arange(ds.n)
        rng.shuffle(idx)
        train_idx = idx[: int(round(train_fraction * ds.n))].tolist()
    mask = np.zeros(ds.n, dtype=bool)
    mask[train_idx] = True

    def subset(m: np.ndarray) -> Dataset:
        return Dataset(ds.features[m], ds.labels[m], ds.categorical,
                       ds.feature_names, ds.class_names,
                       tuple(np.asarray(ds.sessions)[m]) if ds.sessions else ())

    return subset(mask), subset(~mask)


# --- training ----------------------------------------------------------------

def _standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std


def _descend(loss_grad, w0: np.ndarray, lr: float, epochs: int) -> tuple[np.ndarray, list[float]]:
    """Full-batch gradient descent with step halving on any loss increase."""
    w = w0
    loss, grad = loss_grad(w)
    history = [loss]
    for _ in range(epochs):
        step = lr
        while True:
            cand = w - step * grad
            new_loss, new_grad = loss_grad(cand)
            if new_loss <= loss or step < 1e-12:
                break
            step /= 2.0
        if new_loss > loss:
            break
        w, loss, grad = cand, new_loss, new_grad
        history.append(loss)
    return w, history


def train(ds: Dataset, spec: ModelSpec) -> TrainedModel:
    if not np.all(np.isfinite(ds.features)):
        raise BadFeature("non-finite feature values")
    if ds.n == 0:
        raise InsufficientData("empty dataset")
    if ds.categorical and len(np.unique(ds.labels)) < 2:
        raise DegenerateLabels("training needs at least two classes")
    if spec.kind in ("logreg", "knn") and not ds.categorical:
        raise DegenerateLabels(f"{spec.kind} needs categorical labels")
    mean, std = _standardization(ds.features)
    x = (ds.features - mean) / std
    hp = spec.hyperparameters
    if spec.kind == "logreg":
        if len(np.unique(ds.labels)) != 2:
            raise DegenerateLabels("logreg supports exactly two classes")
        y = (ds.labels == ds.labels.max()).astype(np.float64)
        reg = float(hp.get("l2", 1e-4))
        xb = np.hstack([x, np.ones((ds.n, 1))])

        def loss_grad(w):
            z = xb @ w
            p = expit(z)
            eps = 1e-12
            loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
            loss += 0.5 * reg * np.dot(w[:-1], w[:-1])
            grad = xb.T @ (p - y) / ds.n
            grad[:-1] += reg * w[:-1]
            return loss, grad

        w0 = np.zeros(ds.d + 1)
        w, history = _descend(loss_grad, w0, float(hp.get("learning_rate", 1.0)),
                              int(hp.get("epochs", 500)))
        params = {"weights": w[:-1].tolist(), "bias": float(w[-1])}
        return TrainedModel(spec, ds.d, mean, std, params, history)
    if spec.kind == "knn":
        k = int(hp.get("k", 5))
        if k > ds.n:
            raise InsufficientData(f"k={k} exceeds {ds.n} training rows")
        params = {"k": k, "exemplars": x.tolist(),
                  "labels": ds.labels.astype(int).tolist(),
                  "positive_class": int(ds.labels.max())}
        return TrainedModel(spec, ds.d, mean, std, params, [])
    # mlp regressor, one hidden tanh layer
    width = int(hp.get("width", 16))
    rng = np.random.default_rng(spec.seed)
    y = ds.labels.astype(np.float64)
    y_mean, y_std = float(y.mean()), float(y.std() or 1.0)
    yn = (y - y_mean) / y_std
    sizes = [(width, ds.d), (width,), (1, width), (1,)]
    offsets = np.cumsum([0] + [int(np.prod(s)) for s in sizes])

    def unpack(w):
        return [w[offsets[i]:offsets[i + 1]].reshape(sizes[i]) for i in range(4)]

    def loss_grad(w):
        w1, b1, w2, b2 = unpack(w)
        h = np.tanh(x @ w1.T + b1)
        pred = (h @ w2.T + b2).ravel()
        err = pred - yn
        loss = 0.5 * np.mean(err**2)
        gpred = err[:, None] / ds.n
        gw2 = gpred.T @ h
        gb2 = gpred.sum(axis=0)
        gh = gpred @ w2 * (1 - h**2)
        gw1 = gh.T @ x
        gb1 = gh.sum(axis=0)
        return loss, np.concatenate([gw1.ravel(), gb1, gw2.ravel(), gb2])

    w0 = rng.normal(0, 0.1, size=offsets[-1])
    w, history = _descend(loss_grad, w0, float(hp.get("learning_rate", 0.5)),
                          int(hp.get("epochs", 500)))
    w1, b1, w2, b2 = unpack(w)
    params = {"w1": w1.tolist(), "b1": b1.tolist(), "w2": w2.tolist(),
              "b2": b2.tolist(), "y_mean": y_mean, "y_std": y_std}
    return TrainedModel(spec, ds.d, mean, std, params, history)


def predict(model: TrainedModel, features: np.ndarray,
            threshold: float | None = None) -> tuple[float, int | None]:
    """Continuous score; plus a hard class when a threshold is given.

    Classifier scores live in [0, 1] (class-1 probability for logreg,
    neighbour vote fraction for knn).  A score exactly at the threshold
    classifies as class 1.
    """
    features = np.asarray(features, dtype=np.float64).ravel()
    if len(features) != model.feature_dim:
        raise ShapeMismatch(f"expected {model.feature_dim} features, got {len(features)}")
    x = model.standardize(features)
    if model.spec.kind == "logreg":
        p = model.parameters
        score = float(expit(x @ np.asarray(p["weights"]) + p["bias"]))
    elif model.spec.kind == "knn":
        p = model.parameters
        ex = np.asarray(p["exemplars"])
        labels = np.asarray(p["labels"])
        dist = np.linalg.norm(ex - x, axis=1)
        order = np.lexsort((np.arange(len(dist)), dist))  # stable tie-break
        nearest = labels[order[: p["k"]]]
        score = float(np.mean(nearest == p["positive_class"]))
    else:
        p = model.parameters
        h = np.tanh(np.asarray(p["w1"]) @ x + np.asarray(p["b1"]))
        score = float((np.asarray(p["w2"]) @ h + np.asarray(p["b2"]))[0])
        score = score * p["y_std"] + p["y_mean"]
    cls = None
    if threshold is not None:
        cls = 1 if score >= threshold else 0
    return score, cls


# --- statistics ----------------------------------------------------------------

def welch_t(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, float]:
    """Welch's two-sample t-test: (t, Welch-Satterthwaite df, two-sided p).

    p comes from the regularized incomplete beta form of the Student-t
    survival function.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise InsufficientData("each sample needs >= 2 values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        raise DegenerateVariance("both samples have zero variance")
    na, nb = len(a), len(b)
    se2 = va / na + vb / nb
    t = (a.mean() - b.mean()) / np.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    if t == 0.0:
        p = 1.0
    else:
        p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return float(t), float(df), p


def validate(model: TrainedModel, holdout: Dataset, threshold: float = 0.5,
             n_train: int = 0, same_session_split: bool = False) -> ValidationReport:
    """Accuracy at the threshold plus Welch's t over per-class score
    distributions.  ``same_session_split`` flags validation rows drawn from
    the training session, where temporal autocorrelation inflates accuracy."""
    if not holdout.categorical or holdout.n == 0:
        raise InsufficientData("validation needs a non-empty categorical holdout")
    scores = np.array([predict(model, row)[0] for row in holdout.features])
    predicted = (scores >= threshold).astype(int)
    positive = int(holdout.labels.max())
    truth = (holdout.labels == positive).astype(int)
    accuracy = float(np.mean(predicted == truth))
    t, df, p = welch_t(scores[truth == 1], scores[truth == 0])
    return ValidationReport(accuracy=accuracy, threshold=threshold, t_stat=t,
                            df=df, p_value=p, n_train=n_train, n_val=holdout.n,
                            same_session_split=same_session_split)


# --- persistence ----------------------------------------------------------------

def save_model(model: TrainedModel, path: FsPath | str) -> None:
    data = {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": {"kind": model.spec.kind,
                 "hyperparameters": model.spec.hyperparameters,
                 "seed": model.spec.seed},
        "feature_dim": model.feature_dim,
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "parameters": model.parameters,
        "loss_history": model.loss_history,
    }
    FsPath(path).write_text(json.dumps(data, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: FsPath | str) -> TrainedModel:
    data = json.loads(FsPath(path).read_text(encoding="utf-8"))
    if data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {data.get('format_version')}")
    spec = ModelSpec(**data["spec"])
    return TrainedModel(spec=spec, feature_dim=data["feature_dim"],
                        mean=np.asarray(data["mean"]), std=np.asarray(data["std"]),
                        parameters=data["parameters"],
                        loss_history=list(data["loss_history"]))
