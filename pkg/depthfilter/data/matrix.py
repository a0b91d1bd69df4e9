# depthfilter/data/matrix.py
# Partially observed numeric matrices, flag bookkeeping and CSV I/O.
#
# Public API:
#   DataMatrix, CellFlags, PairFlagSet
#   load_csv(path, na_token="NA", sha256=None) -> DataMatrix
#   write_csv(m, path, na_token="NA") -> None
#   complete_pairs(m, j, k, usable=None) -> (rows, points)
#   complete_rows(m, usable=None) -> rows
#
# A masked-out cell's stored value is never read: every accessor goes through the mask.

from __future__ import annotations
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DataFormatError
from ..utils.log import get_logger
from ..utils.state import atomic_write_text, sha256_file

LOG = get_logger(__name__)

CLEAN = 0
CELL_FLAGGED = 1
CASE_FLAGGED = 2

# Origin codes for flagged cells; sequence stages use SEQUENCE_BASE + d.
ORIGIN_NONE = 0
ORIGIN_UNIVARIATE = 1
ORIGIN_BIVARIATE = 2
ORIGIN_PVARIATE = 3
SEQUENCE_BASE = 10


def origin_label(code: int) -> str:
    if code == ORIGIN_UNIVARIATE:
        return "univariate"
    if code == ORIGIN_BIVARIATE:
        return "bivariate"
    if code == ORIGIN_PVARIATE:
        return "pvariate"
    if code > SEQUENCE_BASE:
        return f"sequence-{code - SEQUENCE_BASE}"
    return "none"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ------------------------------ DataMatrix ------------------------------

@dataclass(frozen=True)
class DataMatrix:
    """n x p real matrix plus an observation mask (True = observed)."""

    values: np.ndarray
    mask: np.ndarray
    columns: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise DataFormatError(f"values must be 2-D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise DataFormatError(f"mask shape {mask.shape} != values shape {values.shape}")
        n, p = values.shape
        if n < 1 or p < 1:
            raise DataFormatError(f"need n >= 1 and p >= 1, got {n} x {p}")
        if not np.all(np.isfinite(values[mask])):
            raise DataFormatError("observed cells must be finite")
        columns = tuple(self.columns) if self.columns else tuple(f"V{j + 1}" for j in range(p))
        if len(columns) != p:
            raise DataFormatError(f"{len(columns)} column names for {p} columns")
        # Masked cells are zeroed so no computation can pick up a stale value.
        clean = np.where(mask, values, 0.0)
        object.__setattr__(self, "values", _frozen(clean))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "columns", columns)

    @classmethod
    def from_array(cls, x: np.ndarray, columns: Sequence[str] = ()) -> "DataMatrix":
        """Build from an array where NaN marks a missing cell."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return cls(values=np.nan_to_num(x, nan=0.0), mask=~np.isnan(x), columns=tuple(columns))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def to_array(self) -> np.ndarray:
        """Values with NaN in every masked cell."""
        return np.where(self.mask, self.values, np.nan)

    def with_mask(self, mask: np.ndarray) -> "DataMatrix":
        """Same values observed only where both the current and the new mask allow."""
        return DataMatrix(values=self.values, mask=self.mask & np.asarray(mask, dtype=bool), columns=self.columns)

    def select_rows(self, rows: Sequence[int]) -> "DataMatrix":
        rows = np.asarray(rows, dtype=int)
        return DataMatrix(values=self.values[rows], mask=self.mask[rows], columns=self.columns)

    def select_columns(self, cols: Sequence[int]) -> "DataMatrix":
        cols = list(cols)
        return DataMatrix(values=self.values[:, cols], mask=self.mask[:, cols], columns=tuple(self.columns[c] for c in cols))

    def observed(self, j: int, usable: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(row indices, values) of column j's observed (and usable) cells."""
        ok = self.mask[:, j] if usable is None else self.mask[:, j] & usable[:, j]
        rows = np.flatnonzero(ok)
        return rows, self.values[rows, j]


# ------------------------------ Flags ------------------------------

@dataclass(frozen=True)
class PairFlagSet:
    """The set J of (row, j, k) triples, j < k, flagged by bivariate filters."""

    n: int
    p: int
    triples: FrozenSet[Tuple[int, int, int]] = frozenset()

    def __post_init__(self) -> None:
        for (i, j, k) in self.triples:
            if not (0 <= i < self.n and 0 <= j < k < self.p):
                raise ValueError(f"triple {(i, j, k)} out of range for n={self.n}, p={self.p}")

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, item: object) -> bool:
        return item in self.triples

    def union(self, triples: Iterable[Tuple[int, int, int]]) -> "PairFlagSet":
        extra = set()
        for (i, j, k) in triples:
            extra.add((int(i), min(int(j), int(k)), max(int(j), int(k))))
        return PairFlagSet(self.n, self.p, frozenset(self.triples | extra))

    def counts(self) -> np.ndarray:
        """m_ij: number of flagged pairs row i's cell j takes part in, either role."""
        m = np.zeros((self.n, self.p), dtype=int)
        for (i, j, k) in self.triples:
            m[i, j] += 1
            m[i, k] += 1
        return m

    def sorted(self) -> List[Tuple[int, int, int]]:
        return sorted(self.triples)


@dataclass(frozen=True)
class CellFlags:
    """Tri-state flag map plus the stage that set each flag."""

    state: np.ndarray
    origin: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        state = np.asarray(self.state, dtype=np.int8)
        origin = np.zeros(state.shape, dtype=np.int16) if self.origin is None else np.asarray(self.origin, dtype=np.int16)
        if origin.shape != state.shape:
            raise ValueError("origin and state shapes differ")
        case_rows = (state == CASE_FLAGGED).any(axis=1)
        if np.any(state[case_rows] != CASE_FLAGGED):
            raise ValueError("a CaseFlagged row must be CaseFlagged in every cell")
        object.__setattr__(self, "state", _frozen(state))
        object.__setattr__(self, "origin", _frozen(origin))

    @classmethod
    def empty(cls, n: int, p: int) -> "CellFlags":
        return cls(state=np.zeros((n, p), dtype=np.int8))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.state.shape  # type: ignore[return-value]

    @property
    def U(self) -> np.ndarray:
        """Auxiliary 0/1 matrix: 1 where the cell is not filtered."""
        return (self.state == CLEAN).astype(int)

    def usable(self, m: DataMatrix) -> np.ndarray:
        """Cells that are observed in the data and not filtered."""
        return m.mask & (self.state == CLEAN)

    def flag_cells(self, cells: Iterable[Tuple[int, int]], origin: int) -> "CellFlags":
        state = self.state.copy()
        org = self.origin.copy()
        for (i, j) in cells:
            if state[i, j] == CLEAN:
                state[i, j] = CELL_FLAGGED
                org[i, j] = origin
        return CellFlags(state=state, origin=org)

    def flag_rows(self, rows: Iterable[int], origin: int) -> "CellFlags":
        state = self.state.copy()
        org = self.origin.copy()
        for i in rows:
            fresh = state[i] != CASE_FLAGGED
            org[i, fresh] = origin
            state[i, :] = CASE_FLAGGED
        return CellFlags(state=state, origin=org)

    def cell_count(self) -> int:
        return int(np.sum(self.state == CELL_FLAGGED))

    def case_count(self) -> int:
        return int((self.state == CASE_FLAGGED).any(axis=1).sum())

    def flagged_cells(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.state == CELL_FLAGGED))]

    def flagged_rows(self) -> List[int]:
        return [int(i) for i in np.flatnonzero((self.state == CASE_FLAGGED).any(axis=1))]


# ------------------------------ Complete cases ------------------------------

def complete_tuple(m: DataMatrix, cols: Sequence[int], usable: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Rows where every listed column is observed (and usable), with their sub-vectors."""
    cols = list(cols)
    ok = m.mask[:, cols] if usable is None else (m.mask & usable)[:, cols]
    rows = np.flatnonzero(ok.all(axis=1))
    return rows, m.values[np.ix_(rows, cols)]


def complete_pairs(m: DataMatrix, j: int, k: int, usable: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Rows with both cells j and k observed, and the (r x 2) points. Empty when none."""
    if j == k:
        raise ValueError("complete_pairs needs two distinct columns")
    return complete_tuple(m, (j, k), usable)


def complete_rows(m: DataMatrix, usable: Optional[np.ndarray] = None) -> np.ndarray:
    return complete_tuple(m, range(m.p), usable)[0]


# ------------------------------ CSV I/O ------------------------------

def _parse_cell(token: str, na_token: str, row: int, column: str) -> Tuple[float, bool]:
    tok = token.strip()
    if tok == na_token:
        return 0.0, False
    try:
        value = float(tok)
    except ValueError:
        raise DataFormatError(f"malformed number {token!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise DataFormatError(f"non-finite value {token!r}; write missing cells as {na_token!r}", row=row, column=column)
    return value, True


def load_csv(path: str | Path, na_token: str = "NA", sha256: Optional[str] = None) -> DataMatrix:
    """Read a header-plus-numbers CSV. Rows are reported 1-based counting the header as row 1."""
    path = Path(path)
    if sha256 is not None:
        actual = sha256_file(path)
        if actual != sha256.lower():
            raise DataFormatError(f"checksum mismatch for {path}: expected {sha256}, got {actual}")

    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path} is empty") from None
        columns = [h.strip() for h in header]
        if not columns or columns == [""]:
            raise DataFormatError(f"{path} has an empty header")

        values: List[List[float]] = []
        mask: List[List[bool]] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(columns):
                raise DataFormatError(f"expected {len(columns)} fields, found {len(rec)}", row=lineno)
            parsed = [_parse_cell(tok, na_token, lineno, col) for tok, col in zip(rec, columns)]
            values.append([v for v, _ in parsed])
            mask.append([ok for _, ok in parsed])

    if not values:
        raise DataFormatError(f"{path} has no data rows")
    m = DataMatrix(values=np.array(values), mask=np.array(mask), columns=tuple(columns))
    LOG.debug("Loaded %s: n=%d p=%d missing=%d", path, m.n, m.p, int((~m.mask).sum()))
    return m


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def render_csv(m: DataMatrix, na_token: str = "NA") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(m.columns)
    for i in range(m.n):
        w.writerow([_fmt(m.values[i, j]) if m.mask[i, j] else na_token for j in range(m.p)])
    return buf.getvalue()


def write_csv(m: DataMatrix, path: str | Path, na_token: str = "NA") -> None:
    atomic_write_text(path, render_csv(m, na_token))
