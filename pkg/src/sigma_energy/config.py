"""Flat key=value run configuration with a typed schema.

Files hold one `key = value` pair per line, `#` comments, and blank lines.
Dotted keys namespace related options (quad.order_1d, minimize.max_iter).
Unknown keys and malformed values raise with the offending line number.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

KAPPA_DEFAULT = 4.0


def _as_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type tag, default, help)
SCHEMA = {
    "case": ("str", "", "reproduction case name, or 'all'"),
    "map.family": ("str", "identity", "map family registry name"),
    "map.alpha": ("str", "", "profile spec for join/hopf families"),
    "map.gamma": ("str", "", "profile spec for the fiberwise family"),
    "map.f": ("str", "", "profile spec (hedgehog/suspension/shear)"),
    "map.k": ("int", 1, "first winding parameter"),
    "map.l": ("int", 1, "second winding parameter"),
    "map.winding": ("int", 1, "suspension winding"),
    "map.a": ("float", 1.0, "family parameter a"),
    "map.b": ("float", 1.0, "family parameter b"),
    "map.lam": ("float", 1.0, "homothety dilation"),
    "map.chart": ("str", "s3_join", "domain chart spec"),
    "map.r_max": ("float", 10.0, "radial cutoff for noncompact domains"),
    "map.squash_k": ("int", 0, "deform domain: first squash factor (0 = off)"),
    "map.squash_l": ("int", 0, "deform domain: second squash factor"),
    "kappa": ("float", KAPPA_DEFAULT, "coupling constant"),
    "radius": ("float", 1.0, "domain radius rescale before evaluation"),
    "quad.order_1d": ("int", 64, "nodes for reduced 1d quadrature"),
    "quad.order_3d": ("int", 32, "nodes per axis for product quadrature"),
    "grid.n": ("int", 64, "sample count for residual grids"),
    "system": ("str", "auto", "criticality system "
                              "(auto|fh|sig3|contactsig3|fourharm|nomizu)"),
    "tol.critical": ("float", 0.0, "residual verdict tolerance (0 = auto)"),
    "seed": ("int", 20250825, "seed for generated fields and samples"),
    "minimize.n_prof": ("int", 96, "interior profile nodes"),
    "minimize.max_iter": ("int", 4000, "gradient iterations"),
    "stability.count": ("int", 200, "number of generated fields"),
    "stability.band": ("int", 2, "ambient polynomial degree"),
    "stability.form": ("str", "full", "Hessian form"),
    "stability.lam": ("float", 1.0, "homothety dilation for the Hessian"),
}

_CASTS = {"str": str, "int": int, "float": float, "bool": _as_bool}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    values: dict
    source: str = "<defaults>"

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str):
        return self.values[key]

    def override(self, **pairs) -> "RunConfig":
        vals = dict(self.values)
        for key, value in pairs.items():
            key = key.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            vals[key] = value
        return RunConfig(vals, self.source)

    def override_text(self, pairs: dict) -> "RunConfig":
        """Apply string-valued overrides, casting each per the schema."""
        vals = dict(self.values)
        for key, raw in pairs.items():
            if key not in SCHEMA:
                known = ", ".join(sorted(SCHEMA))
                raise ConfigError(
                    f"unknown config key {key!r} (known keys: {known})")
            kind = SCHEMA[key][0]
            try:
                vals[key] = _CASTS[kind](str(raw).strip())
            except ValueError as exc:
                raise ConfigError(
                    f"cannot parse {raw!r} as {kind} for key {key!r}: "
                    f"{exc}") from None
        return RunConfig(vals, self.source)

    def render(self) -> str:
        """Canonical echo of the effective configuration."""
        lines = [f"# effective configuration ({self.source})"]
        for key in sorted(self.values):
            lines.append(f"{key} = {self.values[key]}")
        return "\n".join(lines) + "\n"


def default_config() -> RunConfig:
    return RunConfig({k: spec[1] for k, spec in SCHEMA.items()})


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in SCHEMA:
            known = ", ".join(sorted(SCHEMA))
            raise ConfigError(
                f"{source}:{lineno}: unknown key {key!r} (known keys: "
                f"{known})")
        kind = SCHEMA[key][0]
        try:
            values[key] = _CASTS[kind](val)
        except ValueError as exc:
            raise ConfigError(
                f"{source}:{lineno}: cannot parse {val!r} as {kind} "
                f"for key {key!r}: {exc}") from None
    return RunConfig(values, source)


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return default_config()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)
