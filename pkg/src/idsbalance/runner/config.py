"""Experiment configuration: strict INI parsing, profiles and derived seeds."""
from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from ..balance import KEEP_POLICIES, PRESETS
from ..classifiers import DEFAULTS, KINDS, ClassifierSpec
from ..ctgan import GanConfig
from ..data.schema import ClassLabel
from ..errors import ConfigurationError

ARMS = ("ORG", "RndOSamp", "CTGANSamp")
ARM_STRATEGY = {"ORG": "none", "RndOSamp": "random_oversample", "CTGANSamp": "ctgan"}
PROFILES = {"desk": {"subsample": 0.1, "ctgan_epochs": 30},
            "full": {"subsample": 1.0, "ctgan_epochs": 300}}

_GAN_KEYS = ("epochs", "batch", "noise_dim", "hidden", "critic_steps", "gp_weight", "lr", "tau",
             "steps_per_epoch", "max_modes")
_SECTIONS = {
    "experiment": ("seed", "profile", "arms", "classifiers", "workers", "repeats", "out"),
    "data": ("train", "subsample", "normalize"),
    "tests": None,  # free-form: test-set name = path
    "balance": ("preset", "keep_policy", "targets"),
    "ctgan": _GAN_KEYS,
}


def derive_seed(seed: int, component: str) -> int:
    """Per-component seed: ``seed`` XOR a hash of the component name (63 bits)."""
    digest = int.from_bytes(hashlib.sha256(component.encode()).digest()[:8], "big")
    return (int(seed) ^ digest) & ((1 << 63) - 1)


def _parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def _split_list(text: str) -> list:
    return [p.strip() for p in text.replace("\n", ",").split(",") if p.strip()]


@dataclass(frozen=True)
class ExperimentConfig:
    train: str
    tests: dict
    seed: int
    out: str = "runs/experiment"
    profile: str = "desk"
    arms: tuple = ARMS
    classifiers: tuple = tuple(ClassifierSpec(k) for k in KINDS)
    workers: int = 1
    repeats: int = 1
    subsample: Optional[float] = None
    normalize: bool = True
    preset: str = "equalize"
    keep_policy: str = "retain"
    targets: Optional[dict] = None
    gan: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigurationError(f"unknown profile {self.profile!r}; use desk or full")
        for arm in self.arms:
            if arm not in ARMS:
                raise ConfigurationError(f"unknown experiment arm {arm!r}")
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown balance preset {self.preset!r}")
        if self.keep_policy not in KEEP_POLICIES:
            raise ConfigurationError(f"unknown keep policy {self.keep_policy!r}")
        if self.workers < 1 or self.repeats < 1:
            raise ConfigurationError("workers and repeats must be at least 1")
        if self.subsample is not None and not 0 < self.subsample <= 1:
            raise ConfigurationError("subsample must lie in (0, 1]")
        if not self.tests:
            raise ConfigurationError("at least one test set is required")
        self.gan_config()  # validates the GAN keys

    @property
    def train_fraction(self) -> float:
        return self.subsample if self.subsample is not None else PROFILES[self.profile]["subsample"]

    @property
    def max_modes(self) -> int:
        return int(self.gan.get("max_modes", 10))

    def gan_config(self) -> GanConfig:
        kw = {k: v for k, v in self.gan.items() if k != "max_modes"}
        kw.setdefault("epochs", PROFILES[self.profile]["ctgan_epochs"])
        if "hidden" in kw and not isinstance(kw["hidden"], tuple):
            kw["hidden"] = tuple(int(v) for v in _split_list(str(kw["hidden"])))
        try:
            return GanConfig(seed=derive_seed(self.seed, "ctgan"), **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"[ctgan] {exc}") from None

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arms"] = list(self.arms)
        d["classifiers"] = [c.to_dict() for c in self.classifiers]
        d["gan"] = dict(sorted(self.gan.items()))
        d["tests"] = dict(sorted(self.tests.items()))
        return d

    def fingerprint(self) -> str:
        """Hash of everything that affects results (not ``out`` or ``workers``)."""
        d = self.to_dict()
        for k in ("out", "workers", "train", "tests"):
            d.pop(k)
        d["test_names"] = sorted(self.tests)
        d["resolved"] = {"train_fraction": self.train_fraction,
                         "gan": asdict(self.gan_config()) if "CTGANSamp" in self.arms else None}
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def _targets(text: str) -> dict:
    out = {}
    for part in _split_list(text):
        if ":" not in part:
            raise ConfigurationError(f"target {part!r} must look like Class:count")
        name, count = part.split(":", 1)
        try:
            out[int(ClassLabel.parse(name.strip()))] = int(count)
        except (ValueError, KeyError) as exc:
            raise ConfigurationError(f"bad target {part!r}: {exc}") from None
    return out


def load_config(path: os.PathLike) -> ExperimentConfig:
    """Parse an INI experiment file; unknown sections or keys are errors.

    Relative data paths are resolved against the file's directory.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    parser.optionxform = str  # keep test-set names as written
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return config_from_parser(parser, os.path.dirname(os.path.abspath(path)))


def config_from_parser(parser: configparser.ConfigParser, base: str = ".") -> ExperimentConfig:
    sections = {}
    specs_params = {}
    for name in parser.sections():
        items = dict(parser.items(name))
        if name.startswith("classifier."):
            kind = name.split(".", 1)[1]
            if kind not in KINDS:
                raise ConfigurationError(f"unknown classifier section [{name}]")
            unknown = set(items) - set(DEFAULTS[kind])
            if unknown:
                raise ConfigurationError(f"[{name}] unknown keys {sorted(unknown)}")
            specs_params[kind] = {k: _parse_value(v) for k, v in items.items()}
            continue
        if name not in _SECTIONS:
            raise ConfigurationError(f"unknown section [{name}]")
        allowed = _SECTIONS[name]
        if allowed is not None:
            unknown = set(items) - set(allowed)
            if unknown:
                raise ConfigurationError(f"[{name}] unknown keys {sorted(unknown)}")
        sections[name] = items

    def path(p):
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    exp, data = sections.get("experiment", {}), sections.get("data", {})
    if "train" not in data:
        raise ConfigurationError("[data] train is required")
    if "seed" not in exp:
        raise ConfigurationError("[experiment] seed is required")
    kinds = _split_list(exp.get("classifiers", ",".join(KINDS)))
    for k in kinds:
        if k not in KINDS:
            raise ConfigurationError(f"unknown classifier {k!r}")
    for k in specs_params:
        if k not in kinds:
            raise ConfigurationError(f"[classifier.{k}] configured but {k} is not in the run")
    try:
        seed = int(exp["seed"])
        classifiers = tuple(ClassifierSpec(k, specs_params.get(k, {}), derive_seed(seed, f"classifier.{k}"))
                            for k in kinds)
        bal = sections.get("balance", {})
        gan = {k: _parse_value(v) for k, v in sections.get("ctgan", {}).items()}
        if "hidden" in gan:
            gan["hidden"] = tuple(int(v) for v in _split_list(str(sections["ctgan"]["hidden"])))
        out = exp.get("out", "runs/experiment")
        return ExperimentConfig(
            train=path(data["train"]),
            tests={k: path(v) for k, v in sections.get("tests", {}).items()},
            seed=seed,
            out=path(out),
            profile=exp.get("profile", "desk"),
            arms=tuple(_split_list(exp.get("arms", ",".join(ARMS)))),
            classifiers=classifiers,
            workers=int(exp.get("workers", 1)),
            repeats=int(exp.get("repeats", 1)),
            subsample=float(data["subsample"]) if data.get("subsample") else None,
            normalize=_parse_value(data.get("normalize", "true")) is True,
            preset=bal.get("preset", "equalize"),
            keep_policy=bal.get("keep_policy", "retain"),
            targets=_targets(bal["targets"]) if bal.get("targets") else None,
            gan=gan,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from None


def reseed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Same config under a new global seed (classifier seeds re-derived)."""
    specs = tuple(ClassifierSpec(s.kind, s.params, derive_seed(seed, f"classifier.{s.kind}"))
                  for s in config.classifiers)
    return replace(config, seed=int(seed), classifiers=specs)
