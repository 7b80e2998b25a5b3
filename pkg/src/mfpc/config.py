"""Experiment configuration: sectioned ``key = value`` text.

Example::

    [channel]
    distribution = rayleigh      # rayleigh | uniform | tabulated
    sigma = 5
    users = 1000
    seed = 0

    [protocol]
    alpha = 0.25
    n0 = 5
    beta = 0.1
    e_min = 0
    e_max = 150

    [solver]
    tol = 1e-10
    max_iter = 10000
    initial = midpoint           # or a constant power
    norm = auto                  # auto | weighted_l1 | sup

    [sweep]
    betas = 0.1, 0.5, 1.0, 5.0
    seeds = 0-9

    [decode]
    rate = 1.0
    trials = 1000
    variant = improved           # strict | improved
    power_rule = fixed           # fixed | strategy
    fresh_gains = true
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from mfpc.channel import BoundedUniform, ChannelDistribution, RayleighSquared, load_tabulated
from mfpc.decoding import PowerRule, SicVariant
from mfpc.game import ProtocolParams
from mfpc.solver import MIDPOINT, Norm, SolverConfig


class ConfigError(ValueError):
    pass


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}: {exc}") from None


def parse_int_list(text: str) -> list[int]:
    """Comma/space separated integers; ``a-b`` is an inclusive range."""
    out = []
    for tok in text.replace(",", " ").split():
        try:
            if "-" in tok[1:]:
                lo, hi = tok.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(tok))
        except ValueError:
            raise ConfigError(f"bad integer list entry {tok!r}") from None
    return out


@dataclass
class ExperimentConfig:
    distribution: str = "rayleigh"
    sigma: float = 5.0
    lo: float = 10.0
    hi: float = 50.0
    density_path: str = ""
    normalize_density: bool = False
    users: int = 1000
    seed: int = 0

    alpha: float = 0.25
    n0: float = 5.0
    beta: float = 0.1
    e_min: float = 0.0
    e_max: float = 150.0

    tol: float = 1e-10
    max_iter: int = 10_000
    initial: str = MIDPOINT
    norm: str = "auto"

    betas: list = field(default_factory=lambda: [0.1, 0.5, 1.0, 5.0])
    seeds: list = field(default_factory=lambda: list(range(10)))

    rate: float = 1.0
    trials: int = 1000
    variant: str = "improved"
    power_rule: str = "fixed"
    fresh_gains: bool = True

    base_dir: str = field(default=".", repr=False)

    def channel(self) -> ChannelDistribution:
        try:
            if self.distribution == "rayleigh":
                return RayleighSquared(self.sigma)
            if self.distribution == "uniform":
                return BoundedUniform(self.lo, self.hi)
            if self.distribution == "tabulated":
                path = Path(self.density_path)
                if not path.is_absolute():
                    path = Path(self.base_dir) / path
                return load_tabulated(path, normalize=self.normalize_density)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"[channel] {exc}") from None
        raise ConfigError(f"[channel] unknown distribution {self.distribution!r}")

    def protocol_params(self, beta: float | None = None) -> ProtocolParams:
        try:
            return ProtocolParams(self.alpha, self.n0, self.beta if beta is None else beta, self.e_min, self.e_max)
        except ValueError as exc:
            raise ConfigError(f"[protocol] {exc}") from None

    def solver_config(self) -> SolverConfig:
        initial = self.initial if self.initial == MIDPOINT else float(self.initial)
        try:
            return SolverConfig(tol=self.tol, max_iter=self.max_iter, initial=initial, norm=Norm(self.norm))
        except ValueError as exc:
            raise ConfigError(f"[solver] {exc}") from None

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


_SCHEMA = {
    "channel": {"distribution": str, "sigma": float, "lo": float, "hi": float, "path": str,
                "normalize": bool, "users": int, "seed": int},
    "protocol": {"alpha": float, "n0": float, "beta": float, "e_min": float, "e_max": float},
    "solver": {"tol": float, "max_iter": int, "initial": str, "norm": str},
    "sweep": {"betas": parse_float_list, "seeds": parse_int_list},
    "decode": {"rate": float, "trials": int, "variant": str, "power_rule": str, "fresh_gains": bool},
}
_RENAMED = {("channel", "path"): "density_path", ("channel", "normalize"): "normalize_density"}


def load_config(path) -> ExperimentConfig:
    """Parse a config file; unknown sections or keys are errors."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            conv = _SCHEMA[section].get(key)
            if conv is None:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                if conv is bool:
                    value = parser.getboolean(section, key)
                else:
                    value = conv(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{path}: [{section}] {key}: {exc}") from None
            values[_RENAMED.get((section, key), key)] = value

    cfg = ExperimentConfig(base_dir=str(path.parent), **values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.users < 1:
        raise ConfigError("[channel] users must be >= 1")
    if cfg.seed < 0 or any(s < 0 for s in cfg.seeds):
        raise ConfigError("seeds must be non-negative")
    cfg.channel()
    cfg.protocol_params()
    if cfg.initial != MIDPOINT:
        try:
            float(cfg.initial)
        except ValueError:
            raise ConfigError(f"[solver] initial must be 'midpoint' or a number, got {cfg.initial!r}") from None
    cfg.solver_config()
    try:
        SicVariant(cfg.variant)
        PowerRule(cfg.power_rule)
    except ValueError as exc:
        raise ConfigError(f"[decode] {exc}") from None
    if cfg.rate <= 0 or cfg.trials < 1:
        raise ConfigError("[decode] rate must be > 0 and trials >= 1")
