"""Nested-list data container with integer branch paths.

Every node in a flow graph exchanges these trees.  A branch is addressed by a
tuple of non-negative integers; engine-produced trees use depth-1 paths
``(channel,)``, deeper paths are available to user graphs.  Iteration order is
always lexicographic by path, which fixes CSV column order and flatten order.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

from .errors import BranchNotFound, EmptyTree, ShapeMismatch

Path = tuple[int, ...]


def _check_path(path: Sequence[int]) -> Path:
    p = tuple(int(i) for i in path)
    if not p:
        raise ValueError("path must be non-empty")
    if any(i < 0 for i in p):
        raise ValueError(f"path indices must be non-negative: {p}")
    return p


class DataTree:
    """Immutable map from integer-tuple paths to lists of floats."""

    __slots__ = ("_branches",)

    def __init__(self, branches: dict[Sequence[int], Sequence[float]] | None = None):
        items = {}
        for path, values in (branches or {}).items():
            items[_check_path(path)] = tuple(float(v) for v in values)
        self._branches = dict(sorted(items.items()))

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence[float]]) -> "DataTree":
        """Branch ``(i,)`` holds row i of the matrix."""
        if len(rows) == 0:
            raise EmptyTree("from_matrix needs at least one row")
        if any(len(r) == 0 for r in rows):
            raise EmptyTree("from_matrix rows must be non-empty")
        return cls({(i,): row for i, row in enumerate(rows)})

    def paths(self) -> list[Path]:
        return list(self._branches)

    def shape(self) -> list[tuple[Path, int]]:
        return [(p, len(v)) for p, v in self._branches.items()]

    def get_branch(self, path: Sequence[int]) -> tuple[float, ...]:
        p = _check_path(path)
        try:
            return self._branches[p]
        except KeyError:
            raise BranchNotFound(f"no branch at {p}") from None

    def flatten(self) -> list[float]:
        """Concatenation of branch lists in lexicographic path order."""
        out: list[float] = []
        for values in self._branches.values():
            out.extend(values)
        return out

    def items(self) -> Iterator[tuple[Path, tuple[float, ...]]]:
        return iter(self._branches.items())

    def __len__(self) -> int:
        return len(self._branches)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DataTree):
            return NotImplemented
        return self._branches == other._branches

    def __hash__(self) -> int:
        return hash(tuple(self._branches.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}: {list(v)}" for p, v in self._branches.items())
        return f"DataTree({{{inner}}})"


def unflatten(values: Sequence[float], shape: Iterable[tuple[Sequence[int], int]]) -> DataTree:
    """Inverse of :meth:`DataTree.flatten` for a matching shape."""
    shape = [( _check_path(p), int(n)) for p, n in shape]
    total = sum(n for _, n in shape)
    if total != len(values):
        raise ShapeMismatch(f"shape wants {total} values, got {len(values)}")
    branches = {}
    pos = 0
    for path, n in sorted(shape):
        branches[path] = values[pos:pos + n]
        pos += n
    return DataTree(branches)
