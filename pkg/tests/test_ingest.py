import pytest

from pubdyn.ingest import (IngestError, InternTable, TableFormat,
                           parse_comments, parse_posts, parse_references,
                           write_quarantine)


def _write(tmp_path, name, lines):
    path = tmp_path / name
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


GOOD_POSTS = [
    "1\t101\t11\t1000",
    "2\t102\t11\t1060",
    "3\t103\t12\t1120",
]


def test_parse_posts_accepts_clean_table(tmp_path):
    table, report = parse_posts(_write(tmp_path, "p.tsv", GOOD_POSTS))
    assert len(table) == 3
    assert report.rows_read == 3
    assert report.rows_accepted == 3
    assert report.rows_quarantined == 0
    assert table.message_id.tolist() == [101, 102, 103]
    assert table.author_id.tolist() == [11, 11, 12]
    assert table.created.tolist() == [1000, 1060, 1120]


def test_parse_posts_quarantine_reasons(tmp_path):
    rows = [
        "1\t101\t11\t1000",
        "2\t102\t11",                # missing column
        "3\tnope\t11\t1000",         # bad message id
        "4\t104\t-7\t1000",          # bad author id
        "5\t105\t11\tlate",          # bad timestamp
        "6\t101\t12\t2000",          # duplicate message id
    ]
    table, report = parse_posts(_write(tmp_path, "p.tsv", rows))
    assert len(table) == 1
    assert report.rows_read == 6
    assert report.rows_accepted == 1
    assert report.rows_quarantined == 5
    assert report.quarantine_reasons == {
        "bad_field_count": 1,
        "bad_message_id": 1,
        "bad_author_id": 1,
        "bad_timestamp": 1,
        "duplicate_id": 1,
    }
    # duplicate keeps the first occurrence
    assert table.created.tolist() == [1000]


def test_parse_posts_window_filter(tmp_path):
    rows = ["1\t101\t11\t999", "2\t102\t11\t1000", "3\t103\t11\t2000",
            "4\t104\t11\t2001"]
    table, report = parse_posts(_write(tmp_path, "p.tsv", rows),
                                window=(1000, 2000))
    assert table.message_id.tolist() == [102, 103]
    assert report.quarantine_reasons == {"out_of_window": 2}


def test_parse_comments_self_parent_quarantined(tmp_path):
    rows = ["1\t201\t21\t1500\t101", "2\t202\t21\t1500\t202"]
    table, report = parse_comments(_write(tmp_path, "c.tsv", rows))
    assert table.message_id.tolist() == [201]
    assert report.quarantine_reasons == {"self_parent": 1}


def test_parse_comments_negative_timestamp_allowed(tmp_path):
    rows = ["1\t201\t21\t-30\t101"]
    table, report = parse_comments(_write(tmp_path, "c.tsv", rows))
    assert table.created.tolist() == [-30]
    assert report.rows_accepted == 1


def test_csv_format(tmp_path):
    rows = ["1,101,11,1000", "2,102,12,1010"]
    fmt = TableFormat(delimiter=",")
    table, report = parse_posts(_write(tmp_path, "p.csv", rows), fmt)
    assert len(table) == 2


def test_missing_file_raises_ingest_error(tmp_path):
    with pytest.raises(IngestError):
        parse_posts(tmp_path / "absent.tsv")


def test_parse_references_bijection(tmp_path):
    rows = [
        "1\t11\thttps://x/a",
        "2\t12\thttps://x/b",
        "3\t11\thttps://x/c",      # id already mapped
        "4\t13\thttps://x/a",      # url already mapped
        "5\t14\t",                 # empty url
    ]
    entries, report = parse_references(_write(tmp_path, "r.tsv", rows))
    assert [(e.id, e.url) for e in entries] == [(11, "https://x/a"),
                                                (12, "https://x/b")]
    assert report.quarantine_reasons == {
        "duplicate_id": 1, "duplicate_url": 1, "empty_url": 1}


def test_blank_lines_skipped(tmp_path):
    rows = ["1\t101\t11\t1000", "", "2\t102\t11\t1060"]
    table, report = parse_posts(_write(tmp_path, "p.tsv", rows))
    assert len(table) == 2
    assert report.rows_read == 2


def test_write_quarantine_sidecar(tmp_path):
    rows = ["1\t101\t11\t1000", "2\tbad\t11\t1000"]
    _, report = parse_posts(_write(tmp_path, "p.tsv", rows))
    out = tmp_path / "q.tsv"
    write_quarantine(out, report)
    line = out.read_text(encoding="utf-8").rstrip("\n")
    assert line == "bad_message_id\t2\t2\tbad\t11\t1000"


def test_intern_table_round_trip():
    table = InternTable()
    urls = [f"https://x/{i}" for i in range(10)]
    ids = [table.intern(u) for u in urls]
    assert ids == list(range(1, 11))
    assert [table.intern(u) for u in urls] == ids
    for ident, url in zip(ids, urls):
        assert table.url_for(ident) == url
    assert table.lookup("https://x/3") == 4
    assert table.lookup("https://never") is None
    with pytest.raises(ValueError):
        table.intern("")


def test_tables_are_sequences(tmp_path):
    table, _ = parse_posts(_write(tmp_path, "p.tsv", GOOD_POSTS))
    records = list(table)
    assert len(records) == 3
    assert records[0].message_id == 101
    assert table[1].author_id == 11
    sliced = table[1:]
    assert len(sliced) == 2
    assert sliced[0].message_id == 102
