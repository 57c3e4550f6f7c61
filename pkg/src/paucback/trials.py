"""Pairwise and triplet training structures built from labeled embeddings.

A pair difference z = x_a - x_b carries label +1 (same speaker) or -1
(different speakers).  The sign of z is first-minus-second in input order;
every consumer uses z z^T or ||z|| forms, which are sign-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingSet
from .errors import ValidationError


@dataclass
class PairSet:
    """All unordered utterance pairs of a vector set.

    Stores the source matrix plus index arrays; the difference vectors are
    materialized lazily since only a small subset is usually needed.
    """

    x: np.ndarray            # [n, d] source vectors
    utt_ids: list[str]
    i_idx: np.ndarray        # first element of each pair
    j_idx: np.ndarray        # second element of each pair
    labels: np.ndarray       # +1 same speaker, -1 different
    _z: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_pairs(self) -> int:
        return len(self.i_idx)

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n_negative(self) -> int:
        return int(np.count_nonzero(self.labels == -1))

    @property
    def z(self) -> np.ndarray:
        """Difference vectors [n_pairs, d], first-minus-second."""
        if self._z is None:
            self._z = self.x[self.i_idx] - self.x[self.j_idx]
        return self._z

    def src(self, k: int) -> tuple[str, str]:
        """Utterance ids of pair k."""
        return self.utt_ids[self.i_idx[k]], self.utt_ids[self.j_idx[k]]

    def distances(self, m: np.ndarray) -> np.ndarray:
        """Squared Mahalanobis distance of every pair under metric m.

        Computed from the Gram matrix of the source vectors, which costs
        O(n^2 d) instead of O(n_pairs d^2).
        """
        xm = self.x @ m
        g = xm @ self.x.T
        dg = np.einsum("ij,ij->i", xm, self.x)
        return dg[self.i_idx] + dg[self.j_idx] - 2.0 * g[self.i_idx, self.j_idx]


@dataclass
class MiniBatch:
    """Random training batch: two vectors per selected speaker.

    Rows 2k and 2k+1 of ``vectors`` belong to ``speakers[k]`` (speaker-major
    layout); ``pairs`` covers all unordered pairs of the 2s vectors, so it has
    s positives and s(2s-1) - s negatives.
    """

    speakers: list[str]
    utt_ids: list[str]
    vectors: np.ndarray
    pairs: PairSet

    @property
    def s(self) -> int:
        return len(self.speakers)


def build_pairs(emb: EmbeddingSet) -> PairSet:
    """All unordered pairs of an embedding set, labeled by speaker equality."""
    n = len(emb)
    if n < 2:
        raise ValidationError("need at least 2 utterances to build pairs")
    ii, jj = np.triu_indices(n, k=1)
    _, codes = np.unique(emb.speaker_ids, return_inverse=True)
    labels = np.where(codes[ii] == codes[jj], 1, -1).astype(np.int8)
    return PairSet(x=emb.vectors, utt_ids=list(emb.utt_ids),
                   i_idx=ii, j_idx=jj, labels=labels)


def eligible_speakers(emb: EmbeddingSet) -> list[str]:
    """Speakers with at least two utterances, in first-occurrence order."""
    return [spk for spk, idx in emb.by_speaker().items() if len(idx) >= 2]


def sample_minibatch(emb: EmbeddingSet, s: int, rng_seed: int) -> MiniBatch:
    """Select s speakers uniformly without replacement, then two utterances
    per selected speaker.  Deterministic given the seed."""
    if s < 1:
        raise ValidationError(f"batch size must be >= 1, got {s}")
    by_spk = emb.by_speaker()
    eligible = [spk for spk, idx in by_spk.items() if len(idx) >= 2]
    if len(eligible) < s:
        raise ValidationError(
            f"need {s} speakers with >= 2 utterances, only {len(eligible)} eligible"
        )
    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(len(eligible), size=s, replace=False)
    rows: list[int] = []
    speakers: list[str] = []
    for c in chosen:
        spk = eligible[int(c)]
        utts = by_spk[spk]
        pick = rng.choice(len(utts), size=2, replace=False)
        rows.extend([utts[int(pick[0])], utts[int(pick[1])]])
        speakers.append(spk)
    sub = EmbeddingSet(
        dim=emb.dim,
        utt_ids=[emb.utt_ids[r] for r in rows],
        speaker_ids=[emb.speaker_ids[r] for r in rows],
        vectors=emb.vectors[rows],
    )
    return MiniBatch(speakers=speakers, utt_ids=sub.utt_ids,
                     vectors=sub.vectors, pairs=build_pairs(sub))


def enumerate_triplets(batch: MiniBatch) -> list[tuple[int, int, int]]:
    """All (anchor, positive, negative) index triples of a batch.

    Every ordered same-speaker pair is combined with every vector of a
    different speaker, giving exactly 2s(2s-2) triplets.
    """
    s = batch.s
    n = 2 * s
    out: list[tuple[int, int, int]] = []
    for k in range(s):
        a, b = 2 * k, 2 * k + 1
        for anchor, pos in ((a, b), (b, a)):
            for neg in range(n):
                if neg // 2 != k:
                    out.append((anchor, pos, neg))
    return out


@dataclass
class TetradSets:
    """Positive-pair x negative-pair constraints, partitioned by how the
    negative pair shares elements (or just a speaker) with the positive pair.

    tet1: negative pair contains the positive pair's first element;
    tet2: it contains the second element;
    tet3: it contains another vector of the same speaker;
    tet4: it is disjoint from the positive pair's speaker.
    """

    tet1: list[tuple[tuple[int, int], tuple[int, int]]]
    tet2: list[tuple[tuple[int, int], tuple[int, int]]]
    tet3: list[tuple[tuple[int, int], tuple[int, int]]]
    tet4: list[tuple[tuple[int, int], tuple[int, int]]]

    def all(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        return self.tet1 + self.tet2 + self.tet3 + self.tet4

    def counts(self) -> tuple[int, int, int, int]:
        return len(self.tet1), len(self.tet2), len(self.tet3), len(self.tet4)


def enumerate_tetrads(batch: MiniBatch) -> TetradSets:
    """Full cross product of positive and negative pairs, partitioned.

    Intended for small batches; the cross product has s(2s-1)(s-1)... entries
    growing cubically in s.
    """
    pairs = batch.pairs
    pos = [(int(pairs.i_idx[k]), int(pairs.j_idx[k]))
           for k in range(pairs.n_pairs) if pairs.labels[k] == 1]
    neg = [(int(pairs.i_idx[k]), int(pairs.j_idx[k]))
           for k in range(pairs.n_pairs) if pairs.labels[k] == -1]
    tet1, tet2, tet3, tet4 = [], [], [], []
    for a, b in pos:
        spk = a // 2
        for u, v in neg:
            item = ((a, b), (u, v))
            if a in (u, v):
                tet1.append(item)
            elif b in (u, v):
                tet2.append(item)
            elif u // 2 == spk or v // 2 == spk:
                tet3.append(item)
            else:
                tet4.append(item)
    return TetradSets(tet1=tet1, tet2=tet2, tet3=tet3, tet4=tet4)
