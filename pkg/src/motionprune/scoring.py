"""Text-driven visual token importance scoring and Top-K pruning.

Scores are raw scaled query-key similarities between the text segment and
the visual segment of a multimodal embedding matrix (no softmax), averaged
over heads and text tokens into one importance scalar per visual token.
Top-K selection runs per camera view under a retention quota split, and the
pruned sequence is reassembled with all non-visual segments untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidArgument, InvalidState


class SegmentKind(IntEnum):
    BOS = 0
    VIS = 1
    PROP = 2
    TXT = 3
    ACT = 4
    EOS = 5


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    length: int
    view_id: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise InvalidArgument("segment length must be >= 0")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-major token embeddings plus the ordered segment map that indexes them."""

    data: np.ndarray
    segments: tuple

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise InvalidArgument(f"embedding data must be 2-D, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise InvalidArgument("embedding data must be finite")
        segs = tuple(self.segments)
        total = sum(s.length for s in segs)
        if total != data.shape[0]:
            raise InvalidArgument(
                f"segment lengths sum to {total} but data has {data.shape[0]} rows"
            )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "segments", segs)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def _offsets(self):
        offsets = []
        pos = 0
        for seg in self.segments:
            offsets.append(pos)
            pos += seg.length
        return offsets

    def segment_slices(self, kind: SegmentKind):
        """(segment, offset) pairs for every segment of the given kind, in order."""
        out = []
        for seg, off in zip(self.segments, self._offsets()):
            if seg.kind == kind:
                out.append((seg, off))
        return out

    def rows_of(self, kind: SegmentKind) -> np.ndarray:
        parts = [self.data[off : off + seg.length] for seg, off in self.segment_slices(kind)]
        if not parts:
            return self.data[0:0]
        return np.concatenate(parts, axis=0)

    def vis_view_lengths(self) -> tuple:
        return tuple(seg.length for seg, _ in self.segment_slices(SegmentKind.VIS))

    @property
    def l_vis(self) -> int:
        return sum(self.vis_view_lengths())

    @property
    def l_txt(self) -> int:
        return sum(seg.length for seg, _ in self.segment_slices(SegmentKind.TXT))


@dataclass(frozen=True)
class ProjectionWeights:
    """Query/key projection matrices with the multi-head reshape parameters."""

    w_q: np.ndarray
    w_k: np.ndarray
    num_heads: int
    head_dim: int

    def __post_init__(self):
        w_q = np.asarray(self.w_q)
        w_k = np.asarray(self.w_k)
        if w_q.ndim != 2 or w_q.shape[0] != w_q.shape[1]:
            raise InvalidArgument(f"w_q must be square, got shape {w_q.shape}")
        if w_k.shape != w_q.shape:
            raise InvalidArgument("w_q and w_k must have identical shapes")
        if self.num_heads * self.head_dim != w_q.shape[0]:
            raise InvalidArgument(
                f"num_heads*head_dim = {self.num_heads * self.head_dim} "
                f"must equal width {w_q.shape[0]}"
            )
        object.__setattr__(self, "w_q", w_q)
        object.__setattr__(self, "w_k", w_k)


@dataclass(frozen=True)
class ImportanceScores:
    """Per-visual-token relevance, in the vis segment's original order."""

    values: np.ndarray
    view_lengths: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.isfinite(vals).all():
            raise InvalidArgument("importance scores must be finite")
        if sum(self.view_lengths) != vals.shape[0]:
            raise InvalidArgument("view lengths must sum to the score count")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "view_lengths", tuple(self.view_lengths))

    def per_view(self):
        out = []
        pos = 0
        for length in self.view_lengths:
            out.append(self.values[pos : pos + length])
            pos += length
        return out


@dataclass(frozen=True)
class PruneDecision:
    """Which visual tokens to keep: per-view local indices, sorted ascending."""

    rho: float
    alpha: tuple
    kept_indices: tuple  # one int array per view, indices local to the view
    k: int
    k_c: tuple


def attention_scores(
    embeddings: EmbeddingMatrix, weights: ProjectionWeights
) -> np.ndarray:
    """Scaled text-to-vision similarities, shape (num_heads, L_txt, L_vis).

    Raw Q.K^T / sqrt(d) per head; no softmax is applied.
    """
    h_txt = embeddings.rows_of(SegmentKind.TXT)
    h_vis = embeddings.rows_of(SegmentKind.VIS)
    if h_txt.shape[0] == 0:
        raise InvalidState("embedding matrix has an empty text segment")
    if h_vis.shape[0] == 0:
        raise InvalidState("embedding matrix has an empty vision segment")
    if embeddings.cols != weights.w_q.shape[0]:
        raise InvalidArgument(
            f"embedding width {embeddings.cols} does not match "
            f"projection width {weights.w_q.shape[0]}"
        )
    q = h_txt @ weights.w_q  # (L_txt, D)
    k = h_vis @ weights.w_k  # (L_vis, D)
    nh, d = weights.num_heads, weights.head_dim
    q = q.reshape(h_txt.shape[0], nh, d).transpose(1, 0, 2)  # (H, L_txt, d)
    k = k.reshape(h_vis.shape[0], nh, d).transpose(1, 0, 2)  # (H, L_vis, d)
    return q @ k.transpose(0, 2, 1) / math.sqrt(d)


def aggregate_importance(scores: np.ndarray, view_lengths=None) -> ImportanceScores:
    """Average the score tensor over heads and text queries into one scalar per token."""
    scores = np.asarray(scores)
    if scores.ndim != 3:
        raise InvalidArgument(f"score tensor must be 3-D, got shape {scores.shape}")
    if not np.isfinite(scores).all():
        raise InvalidArgument("score tensor must be finite")
    phi = scores.mean(axis=(0, 1))
    if view_lengths is None:
        view_lengths = (phi.shape[0],)
    return ImportanceScores(phi, tuple(view_lengths))


def _split_quota(k: int, alpha, num_views: int):
    """Floor per-view quotas, then hand the remainder out in descending-alpha order."""
    alpha = [float(a) for a in alpha]
    if len(alpha) != num_views:
        raise InvalidArgument(
            f"alpha has {len(alpha)} entries but there are {num_views} views"
        )
    if any(a < 0 for a in alpha) or abs(sum(alpha) - 1.0) > 1e-9:
        raise InvalidArgument("alpha entries must be >= 0 and sum to 1")
    k_c = [int(math.floor(a * k)) for a in alpha]
    remainder = k - sum(k_c)
    # ties in alpha broken by lower view index, for determinism
    order = sorted(range(num_views), key=lambda c: (-alpha[c], c))
    for c in order[:remainder]:
        k_c[c] += 1
    return k_c


def topk_per_view(phi: ImportanceScores, rho: float, alpha) -> PruneDecision:
    """Keep the k_c highest-scoring tokens in each view, ties to the lower index."""
    if not (0.0 < rho <= 1.0):
        raise InvalidArgument(f"rho must be in (0, 1], got {rho}")
    l_vis = int(phi.values.shape[0])
    k = int(math.floor(rho * l_vis))
    if k == 0:
        raise InvalidArgument(f"rho={rho} with L_vis={l_vis} keeps zero tokens")
    views = phi.per_view()
    k_c = _split_quota(k, alpha, len(views))
    kept = []
    for c, (phi_c, kc) in enumerate(zip(views, k_c)):
        if kc > phi_c.shape[0]:
            raise InvalidArgument(
                f"view {c} has {phi_c.shape[0]} tokens but quota {kc} after redistribution"
            )
        # stable argsort on -phi: ties resolved toward the lower original index
        order = np.argsort(-phi_c, kind="stable")
        kept.append(np.sort(order[:kc]).astype(np.int64))
    return PruneDecision(
        rho=float(rho),
        alpha=tuple(float(a) for a in alpha),
        kept_indices=tuple(kept),
        k=k,
        k_c=tuple(k_c),
    )


def assemble_pruned(embeddings: EmbeddingMatrix, decision: PruneDecision) -> EmbeddingMatrix:
    """Rebuild the sequence, keeping only selected visual rows; other rows pass through."""
    vis_segments = embeddings.segment_slices(SegmentKind.VIS)
    if len(decision.kept_indices) != len(vis_segments):
        raise InvalidArgument(
            f"decision covers {len(decision.kept_indices)} views but the matrix "
            f"has {len(vis_segments)} vision segments"
        )
    parts = []
    new_segments = []
    view = 0
    offsets = embeddings._offsets()
    for seg, off in zip(embeddings.segments, offsets):
        block = embeddings.data[off : off + seg.length]
        if seg.kind == SegmentKind.VIS:
            idx = np.asarray(decision.kept_indices[view], dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= seg.length):
                raise InvalidArgument(
                    f"kept index out of range for view {view} (length {seg.length})"
                )
            block = block[idx]
            new_segments.append(Segment(seg.kind, int(idx.size), seg.view_id))
            view += 1
        else:
            new_segments.append(seg)
        parts.append(block)
    return EmbeddingMatrix(np.concatenate(parts, axis=0), tuple(new_segments))


def prune_pipeline(embeddings: EmbeddingMatrix, weights: ProjectionWeights,
                   rho: float, alpha):
    """Score, select, and reassemble in one pass at the embedding stage.

    Returns (pruned matrix, decision, importance scores).
    """
    scores = attention_scores(embeddings, weights)
    phi = aggregate_importance(scores, embeddings.vis_view_lengths())
    decision = topk_per_view(phi, rho, alpha)
    pruned = assemble_pruned(embeddings, decision)
    return pruned, decision, phi
