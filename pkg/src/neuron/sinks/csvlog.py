"""Append-only CSV logging.

Format (docs/csv.md): UTF-8, comma-separated, LF line endings.  The header is
written exactly once, when the file is created; existing contents are never
truncated.  Columns are ``ch<path>_b<index>`` derived from the tree shape,
with an optional leading ISO-8601 millisecond UTC ``timestamp``.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path as FsPath

from ..datatree import DataTree
from ..errors import IoError, ShapeMismatch


def header_for_shape(shape: list[tuple[tuple[int, ...], int]], with_timestamp: bool) -> str:
    cols = []
    if with_timestamp:
        cols.append("timestamp")
    for path, length in shape:
        tag = "_".join(str(i) for i in path)
        cols.extend(f"ch{tag}_b{j}" for j in range(length))
    return ",".join(cols)


def _format_ts(epoch_ms: int) -> str:
    dt = datetime.fromtimestamp(epoch_ms / 1000.0, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{epoch_ms % 1000:03d}Z"


class CsvAppender:
    """One writer per file; refuses rows that do not match the header."""

    def __init__(self, path: FsPath | str, with_timestamp: bool = True):
        self.path = FsPath(path)
        if not self.path.parent.is_dir():
            raise IoError(f"parent directory missing: {self.path.parent}")
        self.with_timestamp = with_timestamp
        self.refused_rows = 0
        self._header: str | None = None
        if self.path.exists() and self.path.stat().st_size > 0:
            with self.path.open("r", encoding="utf-8") as f:
                self._header = f.readline().rstrip("\n")

    def append(self, tree: DataTree, epoch_ms: int = 0) -> None:
        header = header_for_shape(tree.shape(), self.with_timestamp)
        if self._header is None:
            try:
                with self.path.open("a", encoding="utf-8", newline="") as f:
                    f.write(header + "\n")
            except OSError as e:
                raise IoError(f"cannot write {self.path}: {e}") from None
            self._header = header
        elif header != self._header:
            self.refused_rows += 1
            raise ShapeMismatch(
                f"row shape does not match header of {self.path} "
                f"({header!r} vs {self._header!r})")
        fields = [] if not self.with_timestamp else [_format_ts(epoch_ms)]
        fields.extend(repr(v) for v in tree.flatten())
        try:
            with self.path.open("a", encoding="utf-8", newline="") as f:
                f.write(",".join(fields) + "\n")
        except OSError as e:
            raise IoError(f"cannot write {self.path}: {e}") from None


def csv_append(path: FsPath | str, tree: DataTree, with_timestamp: bool = True,
               epoch_ms: int = 0) -> None:
    """One-shot append; header created with the file, never truncates."""
    CsvAppender(path, with_timestamp).append(tree, epoch_ms)
