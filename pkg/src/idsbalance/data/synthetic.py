"""Synthetic records in the NSL-KDD text format.

The public dataset is not bundled. This generator produces records with the
same 43-field layout, real attack names and class-dependent feature
distributions, so every stage of the pipeline can run (and be tested)
without it. Nothing here imitates the real marginals beyond their broad
shape: nonnegative counts, byte volumes spread over decades, rates in [0, 1].
"""
from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from .labels import default_attack_map
from .records import RawRecord, serialize_records
from .schema import FEATURES, N_CLASSES, ClassLabel

PROTOCOLS = ("icmp", "tcp", "udp")
SERVICES = ("domain_u", "ecr_i", "eco_i", "ftp", "ftp_data", "http", "imap4", "other",
            "private", "smtp", "telnet")
FLAGS = ("REJ", "RSTO", "RSTR", "S0", "SF", "SH")

_BINARY = {"land", "logged_in", "root_shell", "is_host_login", "is_guest_login", "su_attempted"}
_BYTES = {"src_bytes", "dst_bytes"}
_ALWAYS_ZERO = {"num_outbound_cmds"}  # constant in the public release as well
_COUNTS = {"count", "srv_count", "dst_host_count", "dst_host_srv_count"}

# class profiles are drawn once from this fixed stream so they never depend on the caller's seed
_PROFILE_SEED = 20240601


def _profiles(separation: float):
    rng = np.random.default_rng(_PROFILE_SEED)
    profiles = []
    for _ in range(N_CLASSES):
        prof = {
            "protocol": rng.dirichlet(np.full(len(PROTOCOLS), 0.7)),
            "service": rng.dirichlet(np.full(len(SERVICES), 0.4)),
            "flag": rng.dirichlet(np.full(len(FLAGS), 0.5)),
            "numeric": {},
        }
        for name in FEATURES:
            if name in ("protocol_type", "service", "flag") or name in _ALWAYS_ZERO:
                continue
            if name in _BINARY:
                prof["numeric"][name] = rng.beta(0.6, 2.0)
            elif name in _BYTES:
                prof["numeric"][name] = rng.uniform(2.0, 9.0)
            elif name in _COUNTS:
                prof["numeric"][name] = rng.uniform(1.0, 255.0)
            elif name.endswith("_rate"):
                prof["numeric"][name] = rng.uniform(0.0, 1.0)
            else:
                prof["numeric"][name] = rng.exponential(2.0 * separation)
        profiles.append(prof)
    return profiles


def _attack_names() -> dict:
    names = {label: [] for label in ClassLabel}
    for name, label in sorted(default_attack_map().table.items()):
        names[label].append(name)
    return names


def synthetic_records(counts: Mapping, seed: int = 0, separation: float = 1.0,
                      difficulty: int = 21) -> list[RawRecord]:
    """Generate ``counts[label]`` records per class.

    Parameters
    ----------
    counts : mapping
        ClassLabel (or int / class name) -> number of records.
    seed : int
        Seed of the per-record noise.
    separation : float
        Scales how far apart the class profiles are; smaller values make the
        classes harder to tell apart.
    """
    rng = np.random.default_rng(seed)
    profiles = _profiles(separation)
    names = _attack_names()
    noise = 0.25 / max(separation, 1e-6)
    records = []
    for key in sorted(counts, key=lambda k: int(_as_label(k))):
        label = _as_label(key)
        prof = profiles[label]
        for _ in range(int(counts[key])):
            fields = []
            for name in FEATURES:
                if name == "protocol_type":
                    fields.append(PROTOCOLS[rng.choice(len(PROTOCOLS), p=prof["protocol"])])
                elif name == "service":
                    fields.append(SERVICES[rng.choice(len(SERVICES), p=prof["service"])])
                elif name == "flag":
                    fields.append(FLAGS[rng.choice(len(FLAGS), p=prof["flag"])])
                elif name in _ALWAYS_ZERO:
                    fields.append("0")
                elif name in _BINARY:
                    fields.append(str(int(rng.random() < prof["numeric"][name])))
                elif name in _BYTES:
                    mu = prof["numeric"][name]
                    fields.append(str(int(np.expm1(max(rng.normal(mu, 1.0 + noise), 0.0)))))
                elif name in _COUNTS:
                    lam = prof["numeric"][name]
                    fields.append(str(int(min(511, rng.poisson(lam)))))
                elif name.endswith("_rate"):
                    v = float(np.clip(rng.normal(prof["numeric"][name], noise), 0.0, 1.0))
                    fields.append(f"{v:.2f}")
                else:
                    fields.append(str(int(rng.poisson(prof["numeric"][name]))))
            attack = names[label][rng.integers(len(names[label]))]
            records.append(RawRecord(tuple(fields), attack, difficulty))
    order = rng.permutation(len(records))
    return [records[i] for i in order]


def synthetic_bytes(counts: Mapping, seed: int = 0, separation: float = 1.0) -> bytes:
    return serialize_records(synthetic_records(counts, seed=seed, separation=separation))


def _as_label(key) -> ClassLabel:
    if isinstance(key, str):
        return ClassLabel.parse(key)
    return ClassLabel(int(key))


def scaled_counts(reference: Mapping, fraction: float, minimum: int = 2) -> dict:
    """Proportionally shrink a count table, keeping at least ``minimum`` per class."""
    return {k: max(minimum, int(round(v * fraction))) for k, v in reference.items()}


def write_synthetic_split(path, counts: Mapping, seed: int = 0,
                          separation: Optional[float] = None) -> None:
    with open(path, "wb") as fh:
        fh.write(synthetic_bytes(counts, seed=seed, separation=separation or 1.0))
