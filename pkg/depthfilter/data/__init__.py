from .matrix import (
    CASE_FLAGGED,
    CELL_FLAGGED,
    CLEAN,
    CellFlags,
    DataMatrix,
    PairFlagSet,
    complete_pairs,
    complete_rows,
    complete_tuple,
    load_csv,
    write_csv,
)

__all__ = [
    "CASE_FLAGGED",
    "CELL_FLAGGED",
    "CLEAN",
    "CellFlags",
    "DataMatrix",
    "PairFlagSet",
    "complete_pairs",
    "complete_rows",
    "complete_tuple",
    "load_csv",
    "write_csv",
]
