"""Result canonicalization and fingerprinting.

Result identity is (column count, multiset of canonical rows). Column names
never enter the fingerprint. Cells are tagged scalars with a fixed total
order: NULL < boolean < integer < real < text < blob.

Reals enter the fingerprint quantized on a float_tol grid, so most values
within tolerance hash alike. Values that straddle a grid boundary do not;
`rows_match` is the exact tolerance check for those.
"""

import hashlib
import json
import math
from typing import Any, Iterable, NamedTuple, Sequence

from ..core.models import Cell, Row

TAG_NULL = 0
TAG_BOOL = 1
TAG_INT = 2
TAG_REAL = 3
TAG_TEXT = 4
TAG_BLOB = 5

BLOB_PREFIX = "blob:"


class CanonicalCell(NamedTuple):
    """A tagged scalar; `value` is None only for NULL.

    For reals `value` is the quantized form hashed into the fingerprint and
    `exact` the driver value kept on ExecOutcome rows.
    """

    tag: int
    value: Any
    exact: Any = None

    def sort_key(self) -> tuple:
        if self.value is None:
            return (self.tag, 0, 0)
        return (self.tag, self.value, self.exact if self.tag == TAG_REAL else 0)

    def plain(self) -> Cell:
        """The JSON-friendly cell stored on ExecOutcome rows."""
        if self.tag == TAG_BLOB:
            return f"{BLOB_PREFIX}{self.value}"
        if self.tag == TAG_REAL:
            return self.exact
        return self.value


def _quantize(value: float, float_tol: float) -> float:
    """Snap to a grid of float_tol below 1 and float_tol * 10^k above it."""
    if float_tol <= 0:
        return value
    step = float_tol * 10.0 ** math.floor(math.log10(max(1.0, abs(value))))
    return float(f"{round(value / step) * step:.15g}")


def canonical_cell(value: Any, float_tol: float) -> CanonicalCell:
    """Normalize one raw cell.

    Reals that are integral within float_tol become integers. Non-finite
    reals keep their value on both sides.
    """
    if value is None:
        return CanonicalCell(TAG_NULL, None)
    if isinstance(value, bool):
        return CanonicalCell(TAG_BOOL, value)
    if isinstance(value, int):
        return CanonicalCell(TAG_INT, value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return CanonicalCell(TAG_REAL, value, value)
        nearest = round(value)
        if abs(value - nearest) <= float_tol * max(1.0, abs(value)):
            return CanonicalCell(TAG_INT, int(nearest))
        return CanonicalCell(TAG_REAL, _quantize(value, float_tol), value)
    if isinstance(value, (bytes, bytearray, memoryview)):
        return CanonicalCell(TAG_BLOB, hashlib.sha256(bytes(value)).hexdigest())
    return CanonicalCell(TAG_TEXT, str(value))


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def cells_match(a: Cell, b: Cell, float_tol: float) -> bool:
    """Cell equality on stored rows; reals use |a-b| <= float_tol * max(1, |b|)."""
    if _is_number(a) and _is_number(b) and (isinstance(a, float) or isinstance(b, float)):
        if not (math.isfinite(a) and math.isfinite(b)):
            return a == b
        return abs(a - b) <= float_tol * max(1.0, abs(b))
    return type(a) is type(b) and a == b


def rows_match(a: Sequence[Row], b: Sequence[Row], float_tol: float) -> bool:
    """Row-by-row tolerance check over two canonically ordered row tuples."""
    if len(a) != len(b):
        return False
    for row_a, row_b in zip(a, b):
        if len(row_a) != len(row_b):
            return False
        if not all(cells_match(x, y, float_tol) for x, y in zip(row_a, row_b)):
            return False
    return True


def _row_key(row: Sequence[CanonicalCell]) -> tuple:
    return tuple(cell.sort_key() for cell in row)


def fingerprint(column_count: int, rows: Iterable[Sequence[CanonicalCell]]) -> str:
    """sha256 over the column count and the (already ordered) canonical rows."""
    payload = [column_count, [[[cell.tag, cell.value] for cell in row] for row in rows]]
    encoded = json.dumps(payload, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def canonicalize(
    column_count: int,
    raw_rows: Iterable[Sequence[Any]],
    float_tol: float = 1e-6,
    order_sensitive: bool = False,
) -> tuple[tuple[Row, ...], str]:
    """Normalize rows and compute the result fingerprint.

    Args:
        column_count: Number of projected columns
        raw_rows: Rows as returned by the driver; each has column_count cells
        float_tol: Relative tolerance for numeric cell equality
        order_sensitive: Keep row order instead of treating rows as a multiset

    Returns:
        (normalized rows, lowercase hex fingerprint)
    """
    canonical = [tuple(canonical_cell(v, float_tol) for v in row) for row in raw_rows]
    for row in canonical:
        if len(row) != column_count:
            raise ValueError(f"row has {len(row)} cells, expected {column_count}")
    if not order_sensitive:
        canonical.sort(key=_row_key)
    plain_rows = tuple(tuple(cell.plain() for cell in row) for row in canonical)
    return plain_rows, fingerprint(column_count, canonical)
