"""JSON run-configuration schema shared by the CLI and the host bindings."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidArgument
from .flops import ModelDims, PRESETS, dims_from_preset
from .gate import GateConfig


class ConfigError(InvalidArgument):
    """Configuration value rejected; `field` is the offending key path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


GATE_KEYS = ("rule", "tau", "third_case", "cold_start_windows",
             "max_consecutive_pruned", "omega")
DIMS_KEYS = ("hidden", "mlp", "layers", "num_heads", "head_dim",
             "l_vis", "l_txt", "l_prop", "l_act", "has_eos")


@dataclass
class RunConfig:
    gate: GateConfig
    rho: float = 0.5
    alpha: tuple = (0.4, 0.6)  # scene:wrist split
    scoring_layer: int = 0
    dims: ModelDims | None = None

    def to_dict(self) -> dict:
        out = {
            "rule": self.gate.rule,
            "tau": self.gate.tau,
            "third_case": self.gate.third_case,
            "cold_start_windows": self.gate.cold_start_windows,
            "max_consecutive_pruned": self.gate.max_consecutive_pruned,
            "omega": self.gate.omega,
            "rho": self.rho,
            "alpha": list(self.alpha),
            "scoring_layer": self.scoring_layer,
        }
        if self.dims is not None:
            out["dims"] = {k: getattr(self.dims, k) for k in DIMS_KEYS}
        return out


def _expect(obj, key, types, field=None):
    field = field or key
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        raise ConfigError(field, f"expected {types}, got {type(val).__name__}")
    return val


def parse_config(obj: dict) -> RunConfig:
    """Validate a config mapping; raises ConfigError naming the bad field."""
    if not isinstance(obj, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = set(GATE_KEYS) | {"rho", "alpha", "scoring_layer", "dims",
                              "dims-preset", "dims_preset"}
    for key in obj:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")

    gate_kwargs = {}
    for key in GATE_KEYS:
        if key in obj:
            gate_kwargs[key] = obj[key]
    try:
        gate = GateConfig(**gate_kwargs)
    except InvalidArgument as exc:
        # GateConfig messages start with the field name
        raise ConfigError(str(exc).split(" ")[0], str(exc)) from exc

    rho = obj.get("rho", 0.5)
    if not isinstance(rho, (int, float)) or isinstance(rho, bool) or not (0 < rho <= 1):
        raise ConfigError("rho", f"must be a number in (0, 1], got {rho!r}")

    alpha = obj.get("alpha", [0.4, 0.6])
    if (not isinstance(alpha, (list, tuple)) or not alpha
            or any(not isinstance(a, (int, float)) or isinstance(a, bool) or a < 0
                   for a in alpha)):
        raise ConfigError("alpha", f"must be a list of non-negative numbers, got {alpha!r}")
    if abs(sum(alpha) - 1.0) > 1e-9:
        raise ConfigError("alpha", f"entries must sum to 1, got {sum(alpha)!r}")

    scoring_layer = obj.get("scoring_layer", 0)
    if not isinstance(scoring_layer, int) or isinstance(scoring_layer, bool) or scoring_layer < 0:
        raise ConfigError("scoring_layer", f"must be a non-negative integer, got {scoring_layer!r}")

    # A preset names the widths; sequence lengths always come from "dims".
    dims = None
    preset = obj.get("dims-preset", obj.get("dims_preset"))
    dims_obj = obj.get("dims")
    if preset is not None and preset not in PRESETS:
        raise ConfigError("dims-preset", f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
    if dims_obj is not None:
        if not isinstance(dims_obj, dict):
            raise ConfigError("dims", "must be an object")
        kwargs = dict(dims_obj)
        preset = kwargs.pop("preset", preset)
        for key in kwargs:
            if key not in DIMS_KEYS:
                raise ConfigError(f"dims.{key}", "unknown dims key")
        try:
            if preset is not None:
                dims = dims_from_preset(preset, **kwargs)
            else:
                dims = ModelDims(**kwargs)
        except (InvalidArgument, TypeError) as exc:
            raise ConfigError("dims", str(exc)) from exc
    elif preset is not None:
        raise ConfigError("dims", "a preset fixes widths only; sequence lengths "
                          "(l_vis, l_txt, ...) must be given under dims")

    return RunConfig(gate=gate, rho=float(rho), alpha=tuple(float(a) for a in alpha),
                     scoring_layer=scoring_layer, dims=dims)
