"""Closed-form transformer FLOPs accounting.

Per-layer cost is 2*S^2*D + 4*S*D^2 + 6*S*D*M (attention, projections, MLP).
All counts are exact Python integers; episode expectations mix a float or
rational gamma with the integer costs using Fraction arithmetic so that
expected + savings == T * baseline holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgument

# Public Llama-2 7B architecture widths; sequence lengths are always user supplied.
PRESETS = {
    "llama2-7b-oft": dict(hidden=4096, mlp=11008, layers=32, num_heads=32, head_dim=128),
}


@dataclass(frozen=True)
class ModelDims:
    """All widths and segment lengths feeding the cost model."""

    hidden: int          # D
    mlp: int             # M
    layers: int          # H
    num_heads: int       # N^h
    head_dim: int        # d
    l_vis: int
    l_txt: int
    l_prop: int = 0
    l_act: int = 0
    has_eos: bool = True  # trailing EOS token is optional; default counts it

    def __post_init__(self):
        for name in ("hidden", "mlp", "layers", "num_heads", "head_dim", "l_vis", "l_txt"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"ModelDims.{name} must be a positive integer")
        for name in ("l_prop", "l_act"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"ModelDims.{name} must be >= 0")
        if self.num_heads * self.head_dim != self.hidden:
            raise InvalidArgument(
                f"num_heads*head_dim = {self.num_heads * self.head_dim} "
                f"must equal hidden width {self.hidden}"
            )

    @property
    def seq_len(self) -> int:
        """Full sequence length S: BOS + vis + prop + txt + act (+ EOS)."""
        return 1 + self.l_vis + self.l_prop + self.l_txt + self.l_act + (1 if self.has_eos else 0)

    def pruned_seq_len(self, rho: float) -> int:
        return self.seq_len - self.l_vis + self.kept_tokens(rho)

    def kept_tokens(self, rho: float) -> int:
        if not (0.0 < rho <= 1.0):
            raise InvalidArgument(f"rho must be in (0, 1], got {rho}")
        return int(math.floor(rho * self.l_vis))


def dims_from_preset(name: str, *, l_vis: int, l_txt: int, l_prop: int = 0,
                     l_act: int = 0, has_eos: bool = True) -> ModelDims:
    if name not in PRESETS:
        raise InvalidArgument(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    return ModelDims(l_vis=l_vis, l_txt=l_txt, l_prop=l_prop, l_act=l_act,
                     has_eos=has_eos, **PRESETS[name])


def layer_flops(s: int, d: int, m: int) -> int:
    """One transformer layer on a length-s sequence."""
    if s < 1 or d < 1 or m < 1:
        raise InvalidArgument("layer_flops requires positive dimensions")
    return 2 * s * s * d + 4 * s * d * d + 6 * s * d * m


def baseline_flops(dims: ModelDims) -> int:
    """Unpruned forward through all layers."""
    return dims.layers * layer_flops(dims.seq_len, dims.hidden, dims.mlp)


def scoring_flops(dims: ModelDims) -> int:
    """Q/K projections plus the text-vision similarity matrix."""
    d, nh, hd = dims.hidden, dims.num_heads, dims.head_dim
    return (2 * dims.l_txt * d * d
            + 2 * dims.l_vis * d * d
            + 2 * nh * dims.l_txt * dims.l_vis * hd)


def adp_flops(dims: ModelDims, rho: float) -> int:
    """Pruned forward: scoring overhead plus all layers on the shortened sequence."""
    s_prime = dims.pruned_seq_len(rho)
    return scoring_flops(dims) + dims.layers * layer_flops(s_prime, dims.hidden, dims.mlp)


def episode_expected_flops(dims: ModelDims, rho: float, gamma, t: int):
    """Expected episode cost and savings over t forwards, a fraction gamma pruned.

    Returns (expected, savings) as exact Fractions;
    expected + savings == t * baseline_flops(dims) identically.
    """
    if t < 1:
        raise InvalidArgument(f"t must be >= 1, got {t}")
    g = Fraction(gamma)
    if not (0 <= g <= 1):
        raise InvalidArgument(f"gamma must be in [0, 1], got {gamma}")
    f_base = baseline_flops(dims)
    f_adp = adp_flops(dims, rho)
    expected = t * (g * f_adp + (1 - g) * f_base)
    savings = t * g * (f_base - f_adp)
    return expected, savings


def flops_table(dims: ModelDims, rhos) -> list:
    """Per-rho cost rows for reporting: kept tokens, S', F_ADP, savings, ratio."""
    f_base = baseline_flops(dims)
    rows = []
    for rho in rhos:
        f_adp = adp_flops(dims, rho)
        rows.append(dict(
            rho=float(rho),
            kept=dims.kept_tokens(rho),
            pruned_seq_len=dims.pruned_seq_len(rho),
            flops_adp=f_adp,
            flops_base=f_base,
            savings=f_base - f_adp,
            ratio=f_adp / f_base,
        ))
    return rows
