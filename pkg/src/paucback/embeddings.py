"""Data model and text-file I/O for embeddings, trials, scores, and models.

File formats (all UTF-8, single-space separated, ids contain no whitespace):

* embeddings: first line ``#dim <d>``, then one ``utt_id speaker_id v1 .. vd``
  per line;
* trials: ``enroll_utt test_utt [target|nontarget]`` per line;
* scores: header ``#polarity similarity|distance``, then
  ``enroll_utt test_utt score [target|nontarget]`` per line;
* models: ``#model <kind>``, ``#shape r c`` plus r rows for the primary
  matrix, further matrices introduced by ``#matrix <name>`` lines, scalar
  hyperparameters as ``#param <name> <value>`` lines.

Floats are serialized with 17 significant digits, which round-trips IEEE-754
doubles exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ValidationError

TARGET = "target"
NONTARGET = "nontarget"
UNKNOWN = "unknown"

_LABELS = (TARGET, NONTARGET, UNKNOWN)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class EmbeddingSet:
    """Labeled speaker embeddings: parallel lists of ids plus an [n, dim] array."""

    dim: int
    utt_ids: list[str]
    speaker_ids: list[str]
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.dim <= 0:
            raise ValidationError(f"dim must be positive, got {self.dim}")
        n = len(self.utt_ids)
        if len(self.speaker_ids) != n:
            raise ValidationError("utt_ids and speaker_ids must have equal length")
        if self.vectors.shape != (n, self.dim):
            raise ValidationError(
                f"vectors must have shape ({n}, {self.dim}), got {self.vectors.shape}"
            )
        if n and not np.all(np.isfinite(self.vectors)):
            raise ValidationError("vectors contain non-finite values")
        if len(set(self.utt_ids)) != n:
            seen, dup = set(), None
            for u in self.utt_ids:
                if u in seen:
                    dup = u
                    break
                seen.add(u)
            raise ValidationError(f"duplicate utt_id {dup!r}")
        self._index = {u: i for i, u in enumerate(self.utt_ids)}

    def __len__(self) -> int:
        return len(self.utt_ids)

    def index(self, utt_id: str) -> int:
        """Row index of an utterance; raises ValidationError if absent."""
        try:
            return self._index[utt_id]
        except KeyError:
            raise ValidationError(f"unknown utt_id {utt_id!r}") from None

    def speakers(self) -> list[str]:
        """Distinct speaker ids in first-occurrence order."""
        out, seen = [], set()
        for s in self.speaker_ids:
            if s not in seen:
                seen.add(s)
                out.append(s)
        return out

    def by_speaker(self) -> dict[str, list[int]]:
        """Map speaker id -> row indices, in first-occurrence order."""
        out: dict[str, list[int]] = {}
        for i, s in enumerate(self.speaker_ids):
            out.setdefault(s, []).append(i)
        return out

    def with_vectors(self, vectors: np.ndarray, dim: int | None = None) -> "EmbeddingSet":
        """Same ids with replaced vectors (used by preprocessing transforms)."""
        vectors = np.asarray(vectors, dtype=np.float64)
        return EmbeddingSet(
            dim=int(dim if dim is not None else vectors.shape[1]),
            utt_ids=list(self.utt_ids),
            speaker_ids=list(self.speaker_ids),
            vectors=vectors,
        )


@dataclass
class TrialList:
    """Evaluation trials: (enroll_utt, test_utt, label) with label in
    {target, nontarget, unknown}."""

    enroll: list[str]
    test: list[str]
    labels: list[str]

    def __post_init__(self):
        if not (len(self.enroll) == len(self.test) == len(self.labels)):
            raise ValidationError("trial fields must have equal length")
        for i, (e, t) in enumerate(zip(self.enroll, self.test)):
            if e == t:
                raise ValidationError(f"trial {i} pairs utterance {e!r} with itself")
        for lab in self.labels:
            if lab not in _LABELS:
                raise ValidationError(f"invalid trial label {lab!r}")

    def __len__(self) -> int:
        return len(self.enroll)


@dataclass
class ScoreSet:
    """Scored trials.  ``polarity`` records whether larger scores mean
    same-speaker ("similarity") or different-speaker ("distance")."""

    enroll: list[str]
    test: list[str]
    scores: np.ndarray
    labels: list[str]
    polarity: str = "similarity"

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        n = len(self.enroll)
        if not (len(self.test) == n and self.scores.shape == (n,) and len(self.labels) == n):
            raise ValidationError("score fields must have equal length")
        if self.polarity not in ("similarity", "distance"):
            raise ValidationError(f"invalid polarity {self.polarity!r}")
        if n and not np.all(np.isfinite(self.scores)):
            raise ValidationError("scores contain non-finite values")
        for lab in self.labels:
            if lab not in _LABELS:
                raise ValidationError(f"invalid trial label {lab!r}")

    def __len__(self) -> int:
        return len(self.enroll)

    def as_similarity(self) -> "ScoreSet":
        """This set in similarity polarity (distance scores are negated).

        All evaluation operations consume similarity polarity; this is the
        single conversion point.
        """
        if self.polarity == "similarity":
            return self
        return ScoreSet(
            enroll=list(self.enroll),
            test=list(self.test),
            scores=-self.scores,
            labels=list(self.labels),
            polarity="similarity",
        )

    def target_nontarget(self) -> tuple[np.ndarray, np.ndarray]:
        """Similarity scores split into (target, nontarget) arrays.

        Raises ValidationError if any label is unknown or a class is absent.
        """
        sim = self.as_similarity()
        labs = np.asarray(sim.labels)
        if np.any(labs == UNKNOWN):
            raise ValidationError("metric computation requires labeled trials")
        tar = sim.scores[labs == TARGET]
        non = sim.scores[labs == NONTARGET]
        if len(tar) == 0 or len(non) == 0:
            raise ValidationError("need at least one target and one nontarget trial")
        return tar, non


# ---------------------------------------------------------------------------
# embeddings file


def read_embeddings(path) -> EmbeddingSet:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#dim "):
        raise DataFormatError("missing '#dim <d>' header", path, 1)
    try:
        dim = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise DataFormatError(f"malformed header {lines[0]!r}", path, 1) from None
    if dim <= 0:
        raise DataFormatError(f"dim must be positive, got {dim}", path, 1)

    utt_ids: list[str] = []
    speaker_ids: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 + dim:
            raise DataFormatError(
                f"expected {2 + dim} fields (utt speaker {dim} values), got {len(parts)}",
                path, no,
            )
        utt, spk = parts[0], parts[1]
        if utt in seen:
            raise DataFormatError(f"duplicate utt_id {utt!r}", path, no)
        seen.add(utt)
        try:
            vec = [float(v) for v in parts[2:]]
        except ValueError:
            raise DataFormatError("non-numeric vector component", path, no) from None
        if not all(np.isfinite(vec)):
            raise DataFormatError("non-finite vector component", path, no)
        utt_ids.append(utt)
        speaker_ids.append(spk)
        rows.append(vec)
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingSet(dim=dim, utt_ids=utt_ids, speaker_ids=speaker_ids, vectors=vectors)


def write_embeddings(emb: EmbeddingSet, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#dim {emb.dim}\n")
        for utt, spk, vec in zip(emb.utt_ids, emb.speaker_ids, emb.vectors):
            f.write(f"{utt} {spk} " + " ".join(_fmt(v) for v in vec) + "\n")


# ---------------------------------------------------------------------------
# trial file


def read_trials(path) -> TrialList:
    path = Path(path)
    enroll, test, labels = [], [], []
    with open(path, encoding="utf-8") as f:
        for no, line in enumerate(f, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise DataFormatError(f"expected 2 or 3 fields, got {len(parts)}", path, no)
            if parts[0] == parts[1]:
                raise DataFormatError("trial pairs an utterance with itself", path, no)
            lab = UNKNOWN
            if len(parts) == 3:
                if parts[2] not in (TARGET, NONTARGET):
                    raise DataFormatError(f"invalid label {parts[2]!r}", path, no)
                lab = parts[2]
            enroll.append(parts[0])
            test.append(parts[1])
            labels.append(lab)
    return TrialList(enroll=enroll, test=test, labels=labels)


def write_trials(trials: TrialList, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for e, t, lab in zip(trials.enroll, trials.test, trials.labels):
            if lab == UNKNOWN:
                f.write(f"{e} {t}\n")
            else:
                f.write(f"{e} {t} {lab}\n")


# ---------------------------------------------------------------------------
# score file


def read_scores(path) -> ScoreSet:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#polarity "):
        raise DataFormatError("missing '#polarity similarity|distance' header", path, 1)
    polarity = lines[0].split()[1] if len(lines[0].split()) == 2 else ""
    if polarity not in ("similarity", "distance"):
        raise DataFormatError(f"invalid polarity {polarity!r}", path, 1)
    enroll, test, labels = [], [], []
    scores: list[float] = []
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (3, 4):
            raise DataFormatError(f"expected 3 or 4 fields, got {len(parts)}", path, no)
        try:
            sc = float(parts[2])
        except ValueError:
            raise DataFormatError(f"non-numeric score {parts[2]!r}", path, no) from None
        if not np.isfinite(sc):
            raise DataFormatError("non-finite score", path, no)
        lab = UNKNOWN
        if len(parts) == 4:
            if parts[3] not in (TARGET, NONTARGET):
                raise DataFormatError(f"invalid label {parts[3]!r}", path, no)
            lab = parts[3]
        enroll.append(parts[0])
        test.append(parts[1])
        scores.append(sc)
        labels.append(lab)
    return ScoreSet(enroll=enroll, test=test, scores=np.array(scores, dtype=np.float64),
                    labels=labels, polarity=polarity)


def write_scores(scores: ScoreSet, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#polarity {scores.polarity}\n")
        for e, t, sc, lab in zip(scores.enroll, scores.test, scores.scores, scores.labels):
            if lab == UNKNOWN:
                f.write(f"{e} {t} {_fmt(sc)}\n")
            else:
                f.write(f"{e} {t} {_fmt(sc)} {lab}\n")


# ---------------------------------------------------------------------------
# model file (shared container for all fitted models)


@dataclass
class ModelFile:
    """Generic serialized model: a kind tag, a primary matrix, optional named
    matrices, and scalar parameters."""

    kind: str
    primary: np.ndarray
    named: dict[str, np.ndarray] = field(default_factory=dict)
    params: dict[str, float | int | str] = field(default_factory=dict)


def _parse_param(raw: str) -> float | int | str:
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def read_model(path) -> ModelFile:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#model "):
        raise DataFormatError("missing '#model <kind>' header", path, 1)
    kind = lines[0].split(maxsplit=1)[1].strip()

    matrices: list[tuple[str | None, np.ndarray]] = []
    params: dict[str, float | int | str] = {}
    i = 1
    pending_name: str | None = None
    first = True
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if line.startswith("#matrix "):
            pending_name = line.split(maxsplit=1)[1].strip()
            i += 1
            continue
        if line.startswith("#param "):
            parts = line.split()
            if len(parts) != 3:
                raise DataFormatError("expected '#param <name> <value>'", path, i + 1)
            params[parts[1]] = _parse_param(parts[2])
            i += 1
            continue
        if line.startswith("#shape "):
            parts = line.split()
            try:
                r, c = int(parts[1]), int(parts[2])
            except (IndexError, ValueError):
                raise DataFormatError(f"malformed shape line {line!r}", path, i + 1) from None
            if first and pending_name is not None:
                raise DataFormatError("primary matrix must precede named matrices", path, i + 1)
            rows = []
            for k in range(r):
                no = i + 2 + k
                if no - 1 >= len(lines):
                    raise DataFormatError("truncated matrix block", path, no)
                vals = lines[no - 1].split()
                if len(vals) != c:
                    raise DataFormatError(f"expected {c} values, got {len(vals)}", path, no)
                try:
                    rows.append([float(v) for v in vals])
                except ValueError:
                    raise DataFormatError("non-numeric matrix entry", path, no) from None
            mat = np.array(rows, dtype=np.float64).reshape(r, c)
            if not np.all(np.isfinite(mat)):
                raise DataFormatError("non-finite matrix entry", path, i + 1)
            matrices.append((None if first else pending_name, mat))
            pending_name = None
            first = False
            i += 1 + r
            continue
        raise DataFormatError(f"unexpected line {line!r}", path, i + 1)

    if not matrices:
        raise DataFormatError("model file has no matrix", path, 1)
    named = {}
    for name, mat in matrices[1:]:
        if name is None:
            raise DataFormatError("secondary matrix without '#matrix <name>' line", path)
        named[name] = mat
    return ModelFile(kind=kind, primary=matrices[0][1], named=named, params=params)


def write_model(model: ModelFile, path) -> None:
    path = Path(path)

    def block(f, mat: np.ndarray):
        mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
        f.write(f"#shape {mat.shape[0]} {mat.shape[1]}\n")
        for row in mat:
            f.write(" ".join(_fmt(v) for v in row) + "\n")

    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#model {model.kind}\n")
        block(f, model.primary)
        for name, mat in model.named.items():
            f.write(f"#matrix {name}\n")
            block(f, mat)
        for name, value in model.params.items():
            if isinstance(value, float):
                f.write(f"#param {name} {_fmt(value)}\n")
            else:
                f.write(f"#param {name} {value}\n")
