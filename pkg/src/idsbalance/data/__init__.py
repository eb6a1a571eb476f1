"""NSL-KDD ingestion: parsing, class mapping, encoding, normalization."""
from .encoding import (UNSEEN_CODE, apply_l2_norms, apply_label_encoding, fit_l2_norms,
                       fit_label_encoding)
from .labels import AttackMap, default_attack_map, map_attack_label
from .records import RawRecord, parse_records, serialize_records
from .schema import CLASS_NAMES, FEATURES, N_CLASSES, SYMBOLIC, ClassLabel
from .table import (CONTINUOUS, DISCRETE, ClassDistribution, ColumnMeta, FeatureTable,
                    build_table, class_distribution, fit_encodings, fit_table_norms,
                    normalize_table, read_table, write_table)
