"""Diagnostics over importance vectors: normalization, participation ratio,
entropy, and the exact hypergeometric retention analysis for random pruning."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DegenerateInput, InvalidArgument


def normalize(phi) -> np.ndarray:
    """Turn a score vector into a probability vector.

    Raw similarity scores may be negative; when any entry is, the vector is
    shifted by its minimum before dividing by the sum.
    """
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if phi.size == 0 or not np.isfinite(phi).all():
        raise InvalidArgument("phi must be a non-empty finite vector")
    if (phi < 0).any():
        phi = phi - phi.min()
    total = phi.sum()
    if total == 0:
        raise DegenerateInput("score vector has zero mass after shifting")
    return phi / total


def participation_ratio(p) -> float:
    """Effective number of tokens carrying mass: 1 / sum(p^2), in [1, V]."""
    p = _check_distribution(p)
    return float(1.0 / np.sum(p * p))


def entropy(p, bits: bool = False) -> float:
    """Shannon entropy, natural log by default, with 0*log(0) = 0."""
    p = _check_distribution(p)
    nz = p[p > 0]
    h = float(-np.sum(nz * np.log(nz)))
    return h / math.log(2) if bits else h


def _check_distribution(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size == 0 or not np.isfinite(p).all() or (p < 0).any():
        raise InvalidArgument("p must be a finite non-negative vector")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidArgument(f"p must sum to 1 within 1e-9, got {p.sum()!r}")
    return p


def random_retention_probability(v: int, m: int, k: int, r: int) -> float:
    """P(at least r of m target tokens survive a uniform random keep of k out of v).

    Exact hypergeometric tail computed with integer binomials.
    """
    if not (0 <= m <= v):
        raise InvalidArgument(f"need 0 <= m <= v, got m={m}, v={v}")
    if not (0 <= k <= v):
        raise InvalidArgument(f"need 0 <= k <= v, got k={k}, v={v}")
    if not (0 <= r <= m):
        raise InvalidArgument(f"need 0 <= r <= m, got r={r}, m={m}")
    if r == 0:
        return 1.0
    lo = max(r, k - (v - m))
    hi = min(m, k)
    total = Fraction(0)
    denom = math.comb(v, k)
    for j in range(lo, hi + 1):
        total += Fraction(math.comb(m, j) * math.comb(v - m, k - j), denom)
    return float(total)


def layer_stats_rows(layer_scores) -> list:
    """PR/entropy per layer from {layer index: phi vector}; rows sorted by layer."""
    rows = []
    for layer in sorted(layer_scores):
        p = normalize(layer_scores[layer])
        rows.append(dict(
            layer=int(layer),
            tokens=int(p.size),
            participation_ratio=participation_ratio(p),
            entropy_nats=entropy(p),
            entropy_bits=entropy(p, bits=True),
        ))
    return rows
