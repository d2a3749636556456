"""Ingestion of delimited post/comment/reference tables.

The three input tables share one physical layout: delimited text, one row
per event, first column a row number that is ignored on read.

* posts:      row#, message_id, author_id, unix_seconds
* comments:   row#, message_id, author_id, unix_seconds, parent_id
* references: row#, id, url

Malformed rows are never dropped silently: every rejected row lands in the
report with a stable reason code, and ``rows_read`` always equals
``rows_accepted + rows_quarantined``.  Accepted rows are stored in columnar
tables (numpy-backed) that behave as sequences of typed records, which
keeps multi-million-row corpora cheap while leaving the record API intact.

Timestamps are parsed as *signed* 64-bit seconds even though the schema
says Unix time: real corpora contain comments timestamped before their
post, and validity is judged on deltas downstream, not on the raw value.
"""

from __future__ import annotations

import array
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Union

import numpy as np

__all__ = [
    "IngestError",
    "SchemaError",
    "TableFormat",
    "PostRecord",
    "CommentRecord",
    "RefEntry",
    "QuarantinedRow",
    "IngestReport",
    "PostTable",
    "CommentTable",
    "InternTable",
    "parse_posts",
    "parse_comments",
    "parse_references",
    "write_quarantine",
]

_U64_MAX = (1 << 64) - 1
_I64_MIN = -(1 << 63)
_I64_MAX = (1 << 63) - 1

Source = Union[str, Path, IO[str], IO[bytes], bytes]


class IngestError(Exception):
    """Fatal ingestion failure (unreadable source, empty mandatory input)."""


class SchemaError(IngestError):
    """Header does not match the expected column names under strict mode."""


@dataclass(frozen=True)
class TableFormat:
    """Physical format of an input table.

    The schema fixes the columns; the serialization is configurable.
    Default delimiter is tab, comma is the usual alternative.
    """

    delimiter: str = "\t"
    has_header: bool = False
    strict_header: bool = False


POST_COLUMNS = ("row", "message_id", "author_id", "created")
COMMENT_COLUMNS = ("row", "message_id", "author_id", "created", "parent_id")
REF_COLUMNS = ("row", "id", "url")


@dataclass(frozen=True)
class PostRecord:
    message_id: int
    author_id: int
    created: int


@dataclass(frozen=True)
class CommentRecord:
    message_id: int
    author_id: int
    created: int
    parent_id: int


@dataclass(frozen=True)
class RefEntry:
    id: int
    url: str


@dataclass(frozen=True)
class QuarantinedRow:
    line_number: int
    raw: str
    reason: str


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_accepted: int = 0
    rows_quarantined: int = 0
    quarantine_reasons: Counter = field(default_factory=Counter)
    quarantined: list[QuarantinedRow] = field(default_factory=list)

    def quarantine(self, line_number: int, raw: str, reason: str) -> None:
        self.rows_quarantined += 1
        self.quarantine_reasons[reason] += 1
        self.quarantined.append(QuarantinedRow(line_number, raw, reason))

    def as_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_accepted": self.rows_accepted,
            "rows_quarantined": self.rows_quarantined,
            "quarantine_reasons": dict(sorted(self.quarantine_reasons.items())),
        }


class PostTable(Sequence):
    """Columnar sequence of PostRecord."""

    record_type = PostRecord

    def __init__(self, message_id: np.ndarray, author_id: np.ndarray,
                 created: np.ndarray):
        self.message_id = np.asarray(message_id, dtype=np.uint64)
        self.author_id = np.asarray(author_id, dtype=np.uint64)
        self.created = np.asarray(created, dtype=np.int64)

    @classmethod
    def from_records(cls, records: Iterable) -> "PostTable":
        rows = [(r.message_id, r.author_id, r.created) for r in records]
        if not rows:
            return cls(np.empty(0, np.uint64), np.empty(0, np.uint64),
                       np.empty(0, np.int64))
        mid, aid, created = zip(*rows)
        return cls(np.array(mid, np.uint64), np.array(aid, np.uint64),
                   np.array(created, np.int64))

    def __len__(self) -> int:
        return len(self.message_id)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return type(self)(*(col[index] for col in self._columns()))
        return self.record_type(*(int(col[index]) for col in self._columns()))

    def __iter__(self) -> Iterator:
        cols = self._columns()
        for values in zip(*cols):
            yield self.record_type(*(int(v) for v in values))

    def _columns(self) -> tuple[np.ndarray, ...]:
        return (self.message_id, self.author_id, self.created)


class CommentTable(PostTable):
    """Columnar sequence of CommentRecord."""

    record_type = CommentRecord

    def __init__(self, message_id, author_id, created, parent_id):
        super().__init__(message_id, author_id, created)
        self.parent_id = np.asarray(parent_id, dtype=np.uint64)

    @classmethod
    def from_records(cls, records: Iterable) -> "CommentTable":
        rows = [(r.message_id, r.author_id, r.created, r.parent_id)
                for r in records]
        if not rows:
            empty = np.empty(0, np.uint64)
            return cls(empty, empty.copy(), np.empty(0, np.int64), empty.copy())
        mid, aid, created, pid = zip(*rows)
        return cls(np.array(mid, np.uint64), np.array(aid, np.uint64),
                   np.array(created, np.int64), np.array(pid, np.uint64))

    def _columns(self):
        return (self.message_id, self.author_id, self.created, self.parent_id)


def _open_lines(source: Source):
    """Yield decoded lines from a path, file object or bytes blob."""
    if isinstance(source, (str, Path)):
        try:
            handle = open(source, "r", encoding="utf-8", errors="replace")
        except OSError as exc:
            raise IngestError(f"cannot read {source}: {exc}") from exc
        return handle, True
    if isinstance(source, bytes):
        import io
        return io.StringIO(source.decode("utf-8", errors="replace")), True
    if hasattr(source, "read"):
        first = source.read(0)
        if isinstance(first, bytes):
            import io
            return io.TextIOWrapper(source, encoding="utf-8",
                                    errors="replace"), False
        return source, False
    raise IngestError(f"unsupported source type: {type(source)!r}")


def _check_header(line: str, fmt: TableFormat, expected: tuple[str, ...]) -> None:
    names = [f.strip().lower() for f in line.rstrip("\r\n").split(fmt.delimiter)]
    if names != list(expected):
        raise SchemaError(
            f"header {names!r} does not match expected columns {list(expected)!r}")


def _parse_u64(text: str) -> int | None:
    try:
        value = int(text)
    except ValueError:
        return None
    if value < 0 or value > _U64_MAX:
        return None
    return value


def _parse_i64(text: str) -> int | None:
    try:
        value = int(text)
    except ValueError:
        return None
    if value < _I64_MIN or value > _I64_MAX:
        return None
    return value


def _parse_table(source: Source, fmt: TableFormat, n_fields: int,
                 expected_header: tuple[str, ...], is_comment: bool,
                 window: tuple[int, int] | None):
    """Shared row loop for posts and comments.

    Keeps first occurrence on duplicate message ids; the later row is
    quarantined, so the accepted sequence is stable in input order.
    """
    handle, owned = _open_lines(source)
    report = IngestReport()
    mids = array.array("Q")
    aids = array.array("Q")
    times = array.array("q")
    pids = array.array("Q") if is_comment else None
    seen: set[int] = set()
    delim = fmt.delimiter

    try:
        line_number = 0
        header_pending = fmt.has_header
        for line in handle:
            line_number += 1
            stripped = line.rstrip("\r\n")
            if header_pending:
                header_pending = False
                if fmt.strict_header:
                    _check_header(stripped, fmt, expected_header)
                continue
            if not stripped:
                continue
            report.rows_read += 1
            fields = stripped.split(delim)
            if len(fields) != n_fields:
                report.quarantine(line_number, stripped, "bad_field_count")
                continue
            # fields[0] is the row number column; redundant with physical
            # order, ignored entirely.
            mid = _parse_u64(fields[1])
            if mid is None:
                report.quarantine(line_number, stripped, "bad_message_id")
                continue
            aid = _parse_u64(fields[2])
            if aid is None:
                report.quarantine(line_number, stripped, "bad_author_id")
                continue
            created = _parse_i64(fields[3])
            if created is None:
                report.quarantine(line_number, stripped, "bad_timestamp")
                continue
            if is_comment:
                pid = _parse_u64(fields[4])
                if pid is None:
                    report.quarantine(line_number, stripped, "bad_parent_id")
                    continue
                if pid == mid:
                    report.quarantine(line_number, stripped, "self_parent")
                    continue
            if window is not None and not window[0] <= created <= window[1]:
                report.quarantine(line_number, stripped, "out_of_window")
                continue
            if mid in seen:
                report.quarantine(line_number, stripped, "duplicate_id")
                continue
            seen.add(mid)
            mids.append(mid)
            aids.append(aid)
            times.append(created)
            if is_comment:
                pids.append(pid)
            report.rows_accepted += 1
    finally:
        if owned:
            handle.close()

    mid_arr = np.frombuffer(mids, dtype=np.uint64) if mids else np.empty(0, np.uint64)
    aid_arr = np.frombuffer(aids, dtype=np.uint64) if aids else np.empty(0, np.uint64)
    t_arr = np.frombuffer(times, dtype=np.int64) if times else np.empty(0, np.int64)
    if is_comment:
        pid_arr = (np.frombuffer(pids, dtype=np.uint64)
                   if pids else np.empty(0, np.uint64))
        table = CommentTable(mid_arr, aid_arr, t_arr, pid_arr)
    else:
        table = PostTable(mid_arr, aid_arr, t_arr)
    return table, report


def parse_posts(source: Source, fmt: TableFormat = TableFormat(),
                window: tuple[int, int] | None = None
                ) -> tuple[PostTable, IngestReport]:
    """Parse a posts table into typed records plus an ingest report.

    ``window``, when given, quarantines rows whose timestamp falls outside
    the closed interval (reason ``out_of_window``); None disables window
    filtering.
    """
    return _parse_table(source, fmt, 4, POST_COLUMNS, False, window)


def parse_comments(source: Source, fmt: TableFormat = TableFormat(),
                   window: tuple[int, int] | None = None
                   ) -> tuple[CommentTable, IngestReport]:
    """Parse a comments table; same contract as parse_posts, 5 columns."""
    return _parse_table(source, fmt, 5, COMMENT_COLUMNS, True, window)


def parse_references(source: Source, fmt: TableFormat = TableFormat()
                     ) -> tuple[list[RefEntry], IngestReport]:
    """Parse an id/url reference table, enforcing a bijective mapping."""
    handle, owned = _open_lines(source)
    report = IngestReport()
    entries: list[RefEntry] = []
    by_id: set[int] = set()
    by_url: set[str] = set()
    try:
        line_number = 0
        header_pending = fmt.has_header
        for line in handle:
            line_number += 1
            stripped = line.rstrip("\r\n")
            if header_pending:
                header_pending = False
                if fmt.strict_header:
                    _check_header(stripped, fmt, REF_COLUMNS)
                continue
            if not stripped:
                continue
            report.rows_read += 1
            fields = stripped.split(fmt.delimiter)
            if len(fields) != 3:
                report.quarantine(line_number, stripped, "bad_field_count")
                continue
            ident = _parse_u64(fields[1])
            if ident is None:
                report.quarantine(line_number, stripped, "bad_id")
                continue
            url = fields[2]
            if not url:
                report.quarantine(line_number, stripped, "empty_url")
                continue
            if ident in by_id:
                report.quarantine(line_number, stripped, "duplicate_id")
                continue
            if url in by_url:
                report.quarantine(line_number, stripped, "duplicate_url")
                continue
            by_id.add(ident)
            by_url.add(url)
            entries.append(RefEntry(ident, url))
            report.rows_accepted += 1
    finally:
        if owned:
            handle.close()
    return entries, report


class InternTable:
    """Bijective url -> dense integer id mapping, ids 1..N in first-seen order."""

    def __init__(self) -> None:
        self._by_url: dict[str, int] = {}
        self._urls: list[str] = []

    def intern(self, url: str) -> int:
        if not url:
            raise ValueError("cannot intern an empty url")
        ident = self._by_url.get(url)
        if ident is None:
            ident = len(self._urls) + 1
            self._by_url[url] = ident
            self._urls.append(url)
        return ident

    def lookup(self, url: str) -> int | None:
        return self._by_url.get(url)

    def url_for(self, ident: int) -> str:
        if not 1 <= ident <= len(self._urls):
            raise KeyError(ident)
        return self._urls[ident - 1]

    def __len__(self) -> int:
        return len(self._urls)

    def __contains__(self, url: str) -> bool:
        return url in self._by_url

    def entries(self) -> Iterator[RefEntry]:
        for i, url in enumerate(self._urls, start=1):
            yield RefEntry(i, url)

    def save(self, path: str | Path, fmt: TableFormat = TableFormat()) -> None:
        with open(path, "w", encoding="utf-8") as out:
            for row, entry in enumerate(self.entries(), start=1):
                out.write(f"{row}{fmt.delimiter}{entry.id}"
                          f"{fmt.delimiter}{entry.url}\n")

    @classmethod
    def load(cls, path: str | Path,
             fmt: TableFormat = TableFormat()) -> "InternTable":
        entries, report = parse_references(path, fmt)
        if report.rows_quarantined:
            raise IngestError(
                f"reference table {path} has {report.rows_quarantined} bad rows")
        table = cls()
        for entry in sorted(entries, key=lambda e: e.id):
            assigned = table.intern(entry.url)
            if assigned != entry.id:
                raise IngestError(
                    f"reference table ids are not dense from 1: "
                    f"expected {assigned}, found {entry.id}")
        return table


def write_quarantine(path: str | Path, report: IngestReport,
                     delimiter: str = "\t") -> None:
    """Write the quarantine sidecar: reason, line number, original row."""
    with open(path, "w", encoding="utf-8") as out:
        for row in report.quarantined:
            out.write(f"{row.reason}{delimiter}{row.line_number}"
                      f"{delimiter}{row.raw}\n")
