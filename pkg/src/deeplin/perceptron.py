"""Sparse averaged perceptron weights keyed by (feature, action key)."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from . import kernels

MAGIC = "DEEPLIN-MODEL"
VERSION = "v1"


class ModelFormatError(ValueError):
    pass


class Model:
    """Weights ``weights[feature][key]`` plus lazy averaging accumulators.

    ``now`` counts finished training examples.  A weight changed while
    example ``now`` is processed held its old value for the snapshots
    ``last .. now-1``; the average is the mean over all ``now`` snapshots.
    """

    def __init__(self, mode: str = "joint"):
        self.mode = mode
        self.weights: dict[str, dict[str, float]] = {}
        self._acc: dict[tuple[str, str], float] = {}
        self._last: dict[tuple[str, str], int] = {}
        self.now = 0
        self.averaged = False
        self.meta: dict[str, list[str]] = {}

    def weight(self, feat: str, key: str) -> float:
        row = self.weights.get(feat)
        return row.get(key, 0.0) if row else 0.0

    def update(self, feat: str, key: str, delta: float) -> None:
        row = self.weights.setdefault(feat, {})
        w = row.get(key, 0.0)
        fk = (feat, key)
        self._acc[fk] = self._acc.get(fk, 0.0) + w * (self.now - self._last.get(fk, 0))
        self._last[fk] = self.now
        row[key] = w + delta
        self.averaged = False

    def update_pairs(self, pairs: Iterable[tuple[str, str]], delta: float) -> None:
        for f, k in pairs:
            self.update(f, k, delta)

    def tick(self) -> None:
        self.now += 1

    def averaged_weight(self, feat: str, key: str) -> float:
        w = self.weight(feat, key)
        if self.now == 0:
            return w
        fk = (feat, key)
        return (self._acc.get(fk, 0.0) + w * (self.now - self._last.get(fk, 0))) / self.now

    def finalize(self) -> "Model":
        """Replace current weights by their averages (idempotent)."""
        if self.averaged or self.now == 0:
            self.averaged = True
            return self
        for feat, row in self.weights.items():
            for key in row:
                avg = self.averaged_weight(feat, key)
                row[key] = avg
                self._acc[(feat, key)] = avg * self.now
                self._last[(feat, key)] = self.now
        self.averaged = True
        return self

    def score(self, feats: list[str], keys: list[str]) -> list[float]:
        return kernels.score_keys(self.weights, feats, keys)

    def dot(self, pairs: list[tuple[str, str]]) -> float:
        return kernels.dot_pairs(self.weights, pairs)

    def __len__(self) -> int:
        return sum(1 for row in self.weights.values() for w in row.values() if w != 0.0)

    def __add__(self, other: "Model") -> "Model":
        out = Model(self.mode)
        for m in (self, other):
            for f, row in m.weights.items():
                dst = out.weights.setdefault(f, {})
                for k, w in row.items():
                    dst[k] = dst.get(k, 0.0) + w
        return out

    # -- persistence ------------------------------------------------------

    def lines(self) -> list[str]:
        out = []
        for f, row in self.weights.items():
            for k, w in row.items():
                if w != 0.0:
                    out.append(f"{f} {k}\t{w!r}")
        out.sort()
        meta = [f"@{name} {line}" for name in sorted(self.meta) for line in self.meta[name]]
        return [f"{MAGIC} {VERSION} {self.mode}"] + meta + out

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise ModelFormatError(f"{path}: empty model file")
        head = lines[0].split()
        if len(head) != 3 or head[0] != MAGIC:
            raise ModelFormatError(f"{path}: not a model file")
        if head[1] != VERSION:
            raise ModelFormatError(f"{path}: unsupported model version {head[1]!r}")
        model = cls(head[2])
        for lineno, line in enumerate(lines[1:], 2):
            if not line:
                continue
            if line.startswith("@"):
                name, _, rest = line[1:].partition(" ")
                model.meta.setdefault(name, []).append(rest)
                continue
            try:
                fk, w = line.rsplit("\t", 1)
                f, k = fk.rsplit(" ", 1)
                model.weights.setdefault(f, {})[k] = float(w)
            except ValueError:
                raise ModelFormatError(f"{path}:{lineno}: malformed weight line") from None
        model.averaged = True
        return model


class Classifier:
    """Multi-class averaged perceptron over string features.

    Every class also carries an intercept (a weight on the implicit feature
    ``INTERCEPT``), so a class prior is learned even when no feature fires.
    """

    INTERCEPT = "-INTERCEPT-"

    def __init__(self, classes: list[str], name: str = "classifier"):
        self.classes = list(classes)
        self.model = Model(name)

    def scores(self, feats: list[str], classes: list[str] | None = None) -> list[float]:
        return self.model.score([self.INTERCEPT, *feats], list(classes or self.classes))

    def predict(self, feats: list[str], classes: list[str] | None = None) -> str:
        classes = list(classes or self.classes)
        sc = self.scores(feats, classes)
        best = max(range(len(classes)), key=lambda i: (sc[i], -i))
        return classes[best]

    def learn(self, feats: list[str], gold: str, classes: list[str] | None = None) -> bool:
        """One online step; returns True when the prediction was already right."""
        pred = self.predict(feats, classes)
        if pred != gold:
            for f in [self.INTERCEPT, *feats]:
                self.model.update(f, gold, 1.0)
                self.model.update(f, pred, -1.0)
        self.model.tick()
        return pred == gold

    def finalize(self) -> "Classifier":
        self.model.finalize()
        return self

    def save(self, path: str | Path) -> None:
        self.model.meta["classes"] = self.classes
        self.model.save(path)

    @classmethod
    def load(cls, path: str | Path) -> "Classifier":
        model = Model.load(path)
        out = cls(model.meta.get("classes", []), model.mode)
        out.model = model
        return out
