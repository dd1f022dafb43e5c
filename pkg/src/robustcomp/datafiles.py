"""Line-oriented dataset files.

One line per group. Depth 1 lines hold bare values, depth 2 lines start
with a group id, depth 3 lines with an outer id then a group id. Scalar
values are plain numbers; planar points are written as ``x,y`` tokens.
Blank lines and ``#`` comments are skipped. Parsing either succeeds
completely or fails with the offending line number, and write -> read is
the identity.
"""

from __future__ import annotations

from pathlib import Path

from .composition import HierarchicalDataset
from .errors import ParseError

__all__ = ["read_dataset", "read_groups", "write_dataset", "format_dataset"]


def _parse_value(token: str, kind: str, lineno: int):
    try:
        if kind == "point":
            parts = token.split(",")
            if len(parts) != 2:
                raise ValueError
            return (float(parts[0]), float(parts[1]))
        return float(token)
    except ValueError:
        want = "x,y pair" if kind == "point" else "number"
        raise ParseError(f"expected {want}, got {token!r}", lineno) from None


def _parse_id(token: str, what: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {token!r}", lineno) from None
    if value < 0:
        raise ParseError(f"{what} must be non-negative, got {value}", lineno)
    return value


def _detect_kind(lines) -> str:
    for _, tokens, id_cols in lines:
        if len(tokens) > id_cols:
            return "point" if "," in tokens[id_cols] else "scalar"
    return "scalar"


def read_groups(path, depth: int):
    """Parse a dataset file into ``(kind, rows)`` without the equal-size
    check; rows are ``(ids, values)`` in file order."""
    if depth not in (1, 2, 3):
        raise ParseError(f"depth must be 1, 2, or 3, got {depth}")
    id_cols = depth - 1
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    lines = []
    for lineno, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        lines.append((lineno, body.split(), id_cols))
    if not lines:
        raise ParseError("dataset file has no data lines")
    kind = _detect_kind(lines)
    rows = []
    for lineno, tokens, _ in lines:
        if len(tokens) <= id_cols:
            raise ParseError("line has ids but no values", lineno)
        ids = tuple(
            _parse_id(tok, "group id", lineno) for tok in tokens[:id_cols]
        )
        values = [_parse_value(tok, kind, lineno) for tok in tokens[id_cols:]]
        rows.append((lineno, ids, values))
    return kind, rows


def read_dataset(path, depth: int) -> HierarchicalDataset:
    """Parse a dataset file into a HierarchicalDataset of the given depth."""
    kind, rows = read_groups(path, depth)
    if depth == 1:
        values = [v for _, _, vals in rows for v in vals]
        return HierarchicalDataset.flat(values, kind)
    if depth == 2:
        groups: dict[int, list] = {}
        for lineno, (gid,), vals in rows:
            groups.setdefault(gid, []).extend(vals)
        ordered = [groups[g] for g in sorted(groups)]
        try:
            return HierarchicalDataset.two_level(ordered, kind)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    outers: dict[int, dict[int, list]] = {}
    for lineno, (oid, gid), vals in rows:
        outers.setdefault(oid, {}).setdefault(gid, []).extend(vals)
    nested = [
        [outers[o][g] for g in sorted(outers[o])] for o in sorted(outers)
    ]
    try:
        return HierarchicalDataset.three_level(nested, kind)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _fmt(payload, kind: str) -> str:
    if kind == "point":
        return f"{payload[0]!r},{payload[1]!r}"
    return repr(payload)


def format_dataset(data: HierarchicalDataset) -> str:
    """Render a dataset in the line format ``read_dataset`` accepts."""
    lines = []
    if data.depth == 1:
        lines.append(" ".join(_fmt(v, data.kind) for v in data.groups[0]))
    elif data.depth == 2:
        for i, group in enumerate(data.groups):
            lines.append(f"{i} " + " ".join(_fmt(v, data.kind) for v in group))
    else:
        for jo, outer in enumerate(data.groups):
            for i, group in enumerate(outer):
                lines.append(
                    f"{jo} {i} " + " ".join(_fmt(v, data.kind) for v in group)
                )
    return "\n".join(lines) + "\n"


def write_dataset(data: HierarchicalDataset, path) -> None:
    Path(path).write_text(format_dataset(data), encoding="utf-8")
