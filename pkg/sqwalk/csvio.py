"""CSV and key=value output

every float is written with 17 significant digits, which round-trips a double
exactly, so identical results give identical bytes
"""

import io
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, TextIO

import numpy as np
import pandas as pd

FLOAT_FORMAT: str = "%.17g"
NA_REP: str = "nan"
STDOUT_MARKERS: tuple[str | None, ...] = (None, "-")


@dataclass(frozen=True)
class CsvSeries:
    """a rectangular table with a fixed column order"""

    frame: pd.DataFrame = field(default_factory=pd.DataFrame)

    @classmethod
    def from_columns(cls, **columns: Sequence[Any] | np.ndarray) -> "CsvSeries":
        """columns in keyword order; all must have the same length"""
        lengths: set[int] = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError(
                f"columns must have equal length, got { {k: len(v) for k, v in columns.items()} }"
            )
        return cls(pd.DataFrame({k: np.asarray(v) for k, v in columns.items()}))

    @classmethod
    def from_records(
        cls, records: Sequence[Mapping[str, Any]], columns: Sequence[str]
    ) -> "CsvSeries":
        """one row per record; `columns` fixes the order and is kept even when there are no records"""
        return cls(pd.DataFrame.from_records(list(records), columns=list(columns)))

    @property
    def columns(self) -> list[str]:
        return [str(c) for c in self.frame.columns]

    def __len__(self) -> int:
        return len(self.frame)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.frame.to_csv(
            buf,
            index=False,
            float_format=FLOAT_FORMAT,
            na_rep=NA_REP,
            lineterminator="\n",
        )
        return buf.getvalue()


def _write_text(text: str, out: str | None, stdout: TextIO | None) -> None:
    if out in STDOUT_MARKERS:
        stream: TextIO = stdout if stdout is not None else sys.stdout
        stream.write(text)
        stream.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as f:  # type: ignore[arg-type]
            f.write(text)


def write_csv(series: CsvSeries, out: str | None = None, stdout: TextIO | None = None) -> None:
    """write `series` to the path `out`, or to stdout when `out` is `None` or `"-"`"""
    _write_text(series.to_csv_string(), out, stdout)


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def write_key_values(
    values: Mapping[str, Any], out: str | None = None, stdout: TextIO | None = None
) -> None:
    """one `key=value` line per entry, in mapping order"""
    _write_text(
        "".join(f"{k}={format_value(v)}\n" for k, v in values.items()), out, stdout
    )
