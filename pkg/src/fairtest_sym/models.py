"""Black-box binary classifiers behind a single prediction interface."""

from __future__ import annotations

import json
import logging
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .schema import Dataset, FeatureSchema, Instance

log = logging.getLogger(__name__)


class DegenerateLabels(ValueError):
    pass


class ProtocolError(RuntimeError):
    pass


class ModelTimeout(ProtocolError):
    pass


class ChildExited(ProtocolError):
    pass


class PredictionModel(Protocol):
    def predict(self, instance: Sequence[int]) -> int: ...

    def predict_batch(self, instances) -> np.ndarray: ...


def as_matrix(instances) -> np.ndarray:
    m = np.asarray(instances, dtype=np.int64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    return m


class ConstantModel:
    def __init__(self, cls: int = 0):
        self.cls = int(cls)

    def predict(self, instance):
        return self.cls

    def predict_batch(self, instances):
        return np.full(len(instances), self.cls, dtype=np.int64)


class FunctionModel:
    """Wrap a vectorised ``fn(matrix) -> classes`` as a model."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray]):
        self.fn = fn

    def predict(self, instance):
        return int(self.fn(as_matrix([instance]))[0])

    def predict_batch(self, instances):
        if len(instances) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.asarray(self.fn(as_matrix(instances)), dtype=np.int64)


def feature_model(index: int) -> FunctionModel:
    """Model whose decision is the value of one (binary) feature."""
    return FunctionModel(lambda X: (X[:, index] > 0).astype(np.int64))


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    center: np.ndarray
    half_range: np.ndarray

    def scale(self, X: np.ndarray) -> np.ndarray:
        return (X - self.center) / self.half_range

    def decision_function(self, instances) -> np.ndarray:
        return self.scale(as_matrix(instances)) @ self.weights + self.bias

    def predict_proba(self, instances) -> np.ndarray:
        return _sigmoid(self.decision_function(instances))

    def predict_batch(self, instances) -> np.ndarray:
        if len(instances) == 0:
            return np.zeros(0, dtype=np.int64)
        # sigmoid(z) >= 0.5 iff z >= 0
        return (self.decision_function(instances) >= 0).astype(np.int64)

    def predict(self, instance) -> int:
        return int(self.predict_batch([instance])[0])

    def to_dict(self) -> dict:
        return {
            "kind": "logistic",
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "center": [float(c) for c in self.center],
            "half_range": [float(h) for h in self.half_range],
        }

    @classmethod
    def from_dict(cls, d: dict) -> LogisticModel:
        if d.get("kind") != "logistic":
            raise ValueError(f"not a logistic model file: kind={d.get('kind')!r}")
        return cls(np.array(d["weights"], dtype=float), float(d["bias"]),
                   np.array(d["center"], dtype=float), np.array(d["half_range"], dtype=float))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> LogisticModel:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def domain_scaling(schema: FeatureSchema) -> tuple[np.ndarray, np.ndarray]:
    lo = schema.lows.astype(float)
    hi = schema.highs.astype(float)
    half = (hi - lo) / 2.0
    half[half == 0] = 1.0
    return (lo + hi) / 2.0, half


def train_logistic(data: Dataset, l2: float = 1.0, max_iter: int = 1000,
                   tol: float = 1e-6) -> LogisticModel:
    """Fit L2-regularised logistic regression by full-batch gradient descent.

    Minimises ``sum(logloss) + l2/2 * |w|^2`` (the intercept is not
    penalised), so ``l2 = 1/C`` in the usual parametrisation. Inputs are
    mapped onto [-1, 1] per feature using the schema domain. Weights start at
    zero, which makes training deterministic.
    """
    y = data.y
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise DegenerateLabels("training data needs both classes present")
    center, half = domain_scaling(data.schema)
    X = (data.X - center) / half
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    # Lipschitz bound of the averaged objective's gradient
    lipschitz = 0.25 * np.linalg.eigvalsh(Xb.T @ Xb / n).max() + l2 / n
    step = 1.0 / lipschitz
    theta = np.zeros(d + 1)
    penalty = np.full(d + 1, l2 / n)
    penalty[-1] = 0.0
    for it in range(max_iter):
        p = _sigmoid(Xb @ theta)
        grad = Xb.T @ (p - y) / n + penalty * theta
        if np.abs(grad).max() < tol:
            break
        theta -= step * grad
    log.debug("logistic training stopped after %d iterations", it + 1)
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), center, half)


@dataclass(frozen=True)
class ExternalModelConfig:
    command: str | Sequence[str]
    timeout_ms: int = 5000

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")


_EOF = object()


class ExternalModel:
    """Client for a model served over newline-delimited JSON on a child's stdio.

    Requests are serialised by a lock, so the client can be shared across
    threads; service is sequential.
    """

    chunk = 256

    def __init__(self, cfg: ExternalModelConfig):
        self.cfg = cfg
        argv = shlex.split(cfg.command) if isinstance(cfg.command, str) else list(cfg.command)
        self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                      text=True, bufsize=1)
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._lock = threading.Lock()
        self._handshake()

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _send(self, obj) -> None:
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
        except (BrokenPipeError, ValueError, OSError):
            raise ChildExited(f"model process exited (code {self._proc.poll()})") from None

    def _flush(self):
        try:
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError):
            raise ChildExited(f"model process exited (code {self._proc.poll()})") from None

    def _recv(self) -> dict:
        try:
            line = self._lines.get(timeout=self.cfg.timeout_ms / 1000.0)
        except queue.Empty:
            raise ModelTimeout(f"no reply within {self.cfg.timeout_ms} ms") from None
        if line is _EOF:
            self._lines.put(_EOF)
            raise ChildExited(f"model process exited (code {self._proc.wait()})")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError(f"malformed reply: {line.strip()!r}") from None
        if not isinstance(reply, dict):
            raise ProtocolError(f"reply is not an object: {line.strip()!r}")
        return reply

    def _handshake(self):
        with self._lock:
            self._send({"op": "hello", "version": 1})
            self._flush()
            reply = self._recv()
        if reply.get("ok") is not True or reply.get("classes") != 2:
            raise ProtocolError(f"bad handshake reply: {reply}")

    @staticmethod
    def _class_of(reply: dict) -> int:
        cls = reply.get("class")
        if isinstance(cls, bool) or not isinstance(cls, int) or cls not in (0, 1):
            raise ProtocolError(f"reply lacks a 0/1 integer class: {reply}")
        return cls

    def predict_batch(self, instances) -> np.ndarray:
        rows = as_matrix(instances) if len(instances) else np.zeros((0, 0), dtype=np.int64)
        out = np.empty(len(rows), dtype=np.int64)
        with self._lock:
            for start in range(0, len(rows), self.chunk):
                block = rows[start:start + self.chunk]
                for row in block:
                    self._send({"op": "predict", "features": [int(v) for v in row]})
                self._flush()
                for k in range(len(block)):
                    out[start + k] = self._class_of(self._recv())
        return out

    def predict(self, instance) -> int:
        return int(self.predict_batch([instance])[0])

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def predict_external(cfg: ExternalModelConfig, batch: Sequence[Instance]) -> list[int]:
    """One-shot convenience: spawn, handshake, predict, shut down."""
    with ExternalModel(cfg) as model:
        return [int(c) for c in model.predict_batch(batch)]
