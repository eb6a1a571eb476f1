"""NSL-KDD column schema and the five traffic classes."""
from __future__ import annotations

import enum

FEATURES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in",
    "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)

# symbolic columns get label-encoded; everything else is numeric
SYMBOLIC = frozenset({"protocol_type", "service", "flag"})

N_FEATURES = len(FEATURES)
N_FIELDS = N_FEATURES + 2  # + attack name + difficulty


class ClassLabel(enum.IntEnum):
    """Traffic class. The integer value is the column index used everywhere
    (confusion matrices, score exports, classifier outputs)."""

    NORMAL = 0
    DOS = 1
    PROBE = 2
    U2R = 3
    R2L = 4

    @property
    def display(self) -> str:
        return CLASS_NAMES[self]

    @classmethod
    def parse(cls, name: str) -> "ClassLabel":
        key = name.strip().lower()
        for label in cls:
            if CLASS_NAMES[label].lower() == key or label.name.lower() == key:
                return label
        raise ValueError(f"not a class name: {name!r}")


CLASS_NAMES = ("Normal", "DoS", "Probe", "U2R", "R2L")
N_CLASSES = len(CLASS_NAMES)
