"""Conditional tabular GAN: GAN-space transforms, training-by-sampling, synthesis."""
from .layout import (ColumnCodec, RowLayout, Span, build_layout, codecs_hash, fit_codecs,
                     inverse_transform, inverse_transform_row, transform, transform_row)
from .model import (LABEL_COLUMN, GanConfig, GanModel, build_model, fit_ctgan, fit_table_codecs,
                    generate, generate_vectors, load_model, model_from_bytes, model_to_bytes,
                    save_model, table_matrix, train_gan)
from .sampling import (CondVector, FrequencyTables, RowIndex, condition_vectors,
                       frequency_tables, sample_condition, sample_conditioned_row,
                       sample_conditions)
