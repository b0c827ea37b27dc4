"""Run configuration: one JSON document drives every CLI command."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .errors import ConfigError
from .family import AlphaFamily, FamilyKind
from .sequence import default_k_policy, stage_eps


@dataclass(frozen=True)
class RunConfig:
    family: dict = field(default_factory=lambda: {"kind": FamilyKind.SQRT_SQUAREFREE.value})
    num_stages: int = 4
    num_bases: int = 4
    length: int = 64
    p_max: int = 5
    k_policy: dict = field(default_factory=lambda: {"kind": "default"})
    k_max: int = 6
    digit_cap: int = 4000
    window_budget: int = 1 << 34
    box_budget: int = 4_000_000
    scan_budget: int = 1 << 32
    slack_fraction: str = "1/2"
    threads: int = 1
    out: str = "out"
    witness_l: list = field(default_factory=lambda: list(range(2, 9)))
    coverage_l: list = field(default_factory=lambda: [5, 10, 20])
    theorem1: dict = field(default_factory=lambda: {"k": 3, "eps": "1/8"})
    remark7: dict = field(default_factory=lambda: {"i": 3, "eps": "1/10"})

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.family, dict) or not self.family:
            raise ConfigError("family specification is empty", operation="config.validate")
        AlphaFamily.from_spec(self.family)
        for name in ("num_stages", "num_bases", "length", "digit_cap", "window_budget", "box_budget", "scan_budget"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}", operation="config.validate")
        if not isinstance(self.p_max, int) or self.p_max < 0:
            raise ConfigError("p_max must be a non-negative integer", operation="config.validate")
        if not isinstance(self.threads, int) or self.threads < 0:
            raise ConfigError("threads must be >= 0 (0 = auto)", operation="config.validate")
        if self.k_max < 2:
            raise ConfigError("k_max must be >= 2", operation="config.validate")
        if any((not isinstance(l, int)) or l < 2 for l in self.witness_l + self.coverage_l):
            raise ConfigError("every l must be an integer >= 2", operation="config.validate")
        self.k_policy_fn()
        try:
            f = Fraction(self.slack_fraction)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError("slack_fraction must be a rational like '1/2'", operation="config.validate") from exc
        if not 0 < f < 1:
            raise ConfigError("slack_fraction must lie strictly between 0 and 1", operation="config.validate")

    def k_policy_fn(self) -> Callable[[int], int]:
        kind = self.k_policy.get("kind")
        if kind == "default":
            return default_k_policy
        if kind == "constant":
            value = self.k_policy.get("value")
            if not isinstance(value, int) or value < 1:
                raise ConfigError("constant K-policy needs a positive integer value", operation="config.validate")
            return lambda n: value
        if kind == "scaled":
            # K_n = factor * ceil(1/eps_n)
            factor = self.k_policy.get("factor")
            if not isinstance(factor, int) or factor < 1:
                raise ConfigError("scaled K-policy needs a positive integer factor", operation="config.validate")
            return lambda n: factor * math.ceil(1 / stage_eps(n))
        raise ConfigError(f"unknown K-policy {self.k_policy!r}", operation="config.validate")

    def make_family(self) -> AlphaFamily:
        return AlphaFamily.from_spec(self.family, digit_cap=self.digit_cap)

    def fraction(self, block: str) -> Fraction:
        try:
            return Fraction(str(getattr(self, block)["eps"]))
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad eps in {block}", operation="config.validate") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def content_dict(self) -> dict:
        """Everything except the output location, so trees built in different places compare equal."""
        d = self.to_dict()
        d.pop("out")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", operation="config.load")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}", operation="config.load")
        try:
            return cls(**data)
        except (TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed config: {exc}", operation="config.load") from exc

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", operation="config.load") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: Path | str) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}", operation="config.load") from exc
        return cls.from_json(text)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def sequence_key(self) -> dict:
        """The fields that determine the built sequence."""
        keys = ("family", "num_stages", "num_bases", "length", "k_policy", "k_max", "window_budget", "box_budget")
        return {k: getattr(self, k) for k in keys}
