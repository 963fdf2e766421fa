import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advpath.gridworld import NonAdjacentStep, Path, PathPair
from advpath.storage import (
    FIELDS,
    DatasetError,
    DimensionMismatch,
    HashMismatch,
    InvariantViolation,
    IoFailure,
    Manifest,
    ParseError,
    Record,
    content_hash,
    import_external_pathpairs,
    import_external_records,
    manifest_path,
    parse_records,
    read_records,
    write_records,
)
from records import random_records


def write(tmp_path, records, w=28, h=28, name="d.rec"):
    path = tmp_path / name
    m = write_records(path, records, Manifest("t", w, h))
    return path, m


def test_empty_dataset(tmp_path):
    path, m = write(tmp_path, [])
    assert path.read_text().count("\n") == 1
    assert m.record_count == 0
    recs, m2 = read_records(path)
    assert recs == [] and m2 == m


def test_header_and_line_format(tmp_path):
    pp = PathPair(Path(((0, 0), (1, 1))), Path(((0, 0), (1, 0), (1, 1))))
    rec = Record(7, path_o="0:0,1:1", path_a="0:0,1:0,1:1", label="DP", attack="0")
    assert Record.from_pairs(None, pp, "DP", no=7) == rec
    path, _ = write(tmp_path, [rec], 2, 2)
    assert path.read_text() == (
        "#advpath-records v1 grid=2x2 fields=" + "|".join(FIELDS) + "\n"
        "7|||||0:0,1:1|0:0,1:0,1:1|DP|0\n"
    )


def test_round_trip_thousand_records(tmp_path):
    records = random_records(0, 1000)
    path, m = write(tmp_path, records)
    back, m2 = read_records(path)
    assert back == records
    assert m2 == m and m.record_count == 1000
    assert m.content_hash == content_hash(path.read_bytes())


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40), st.integers(2, 12), st.integers(2, 12))
def test_round_trip_property(tmp_path_factory, seed, n, w, h):
    tmp = tmp_path_factory.mktemp("rt")
    records = random_records(seed, n, w, h)
    path, _ = write(tmp, records, w, h)
    assert read_records(path)[0] == records


def test_writes_are_byte_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    records = random_records(1, 50)
    a, _ = write(tmp_path, records, name="a.rec")
    b, _ = write(tmp_path, records, name="b.rec")
    assert a.read_bytes() == b.read_bytes()
    ja, jb = json.loads(manifest_path(a).read_text()), json.loads(manifest_path(b).read_text())
    assert ja == jb and ja["created"] == "2023-11-14T22:13:20Z"


@pytest.mark.parametrize("rec", [
    Record(1, path_o="0:0", path_a="0:0", label="FP", attack="0"),
    Record(1, path_o="0:0", path_a="0:0", label="DP", attack="1"),
    Record(1, path_o="0:0", path_a="0:0", label="FP", attack=""),
    Record(1, path_o="0:0", path_a="0:0", label="XX", attack="1"),
    Record(1, path_o="0:0,1:1", path_a=""),
    Record(1, path_o="0:0,1:1", path_a="1:1,0:0"),
    Record(1, map_o="0000", map_a="0000", start="0:0", goal="1:1"),
    Record(1, map_o="0000", map_a="0100", start="0:0"),
    Record(1, path_o="0:0,5:5", path_a="0:0"),
])
def test_invalid_records_are_refused(tmp_path, rec):
    with pytest.raises(InvariantViolation):
        write(tmp_path, [rec], 2, 2)
    assert not (tmp_path / "d.rec").exists()


def test_numbers_must_increase(tmp_path):
    with pytest.raises(InvariantViolation):
        write(tmp_path, [Record(2), Record(2)])
    with pytest.raises(InvariantViolation):
        write(tmp_path, [Record(3), Record(1)])


def test_truncated_last_line(tmp_path):
    path, _ = write(tmp_path, random_records(2, 5))
    data = path.read_bytes()
    path.write_bytes(data[:-400])
    with pytest.raises(ParseError) as exc:
        read_records(path)
    assert exc.value.line == 6


def test_bit_flip_in_body(tmp_path):
    # flipping the low bit of the last record number ('4' -> '5') keeps the
    # file well-formed, so only the hash can catch it
    records = [Record(k, label="", attack="") for k in (1, 2, 3, 4)]
    path, _ = write(tmp_path, records)
    data = bytearray(path.read_bytes())
    pos = data.rindex(b"\n4|") + 1
    data[pos] ^= 0x01
    path.write_bytes(bytes(data))
    assert parse_records(bytes(data))[0][-1].no == 5
    with pytest.raises(HashMismatch):
        read_records(path)


def _every_corruption(path, values):
    clean = path.read_bytes()
    for pos in range(len(clean)):
        for v in values(clean[pos]):
            bad = bytearray(clean)
            bad[pos] = v
            path.write_bytes(bytes(bad))
            with pytest.raises(DatasetError):
                read_records(path)
    path.write_bytes(clean)


def test_every_single_byte_corruption_is_detected(tmp_path):
    records = [r for r in random_records(4, 10, 3, 3) if r.map_o and r.label][:1]
    path, _ = write(tmp_path, records + [Record(records[0].no + 1)], 3, 3)
    _every_corruption(path, lambda b: [v for v in range(256) if v != b])


def test_every_bit_flip_is_detected_on_full_size_records(tmp_path):
    records = [r for r in random_records(5, 10) if r.map_o and r.label][:1]
    path, _ = write(tmp_path, records)
    _every_corruption(path, lambda b: [b ^ 0x01, b ^ 0x80])


def test_dimension_mismatch(tmp_path):
    path, _ = write(tmp_path, random_records(6, 3))
    with pytest.raises(DimensionMismatch):
        read_records(path, dims=(10, 10))
    data = path.read_bytes().replace(b"grid=28x28", b"grid=28x27", 1)
    with pytest.raises(DimensionMismatch):
        parse_records(data)


def test_manifest_count_is_checked(tmp_path):
    path, m = write(tmp_path, random_records(7, 3))
    manifest_path(path).write_text(
        json.dumps({**json.loads(m.to_json()), "record_count": 4})
    )
    with pytest.raises(HashMismatch):
        read_records(path)


def test_missing_files(tmp_path):
    with pytest.raises(IoFailure):
        read_records(tmp_path / "nope.rec")
    with pytest.raises(ParseError):
        Manifest.from_json("{}")


def test_duplicates_and_bad_fields():
    head = b"#advpath-records v1 grid=2x2 fields=" + "|".join(FIELDS).encode() + b"\n"
    with pytest.raises(ParseError) as exc:
        parse_records(head + b"1||||||||\n1||||||||\n")
    assert exc.value.line == 3
    with pytest.raises(ParseError):
        parse_records(head + b"1|||\n")
    with pytest.raises(ParseError):
        parse_records(head + b"x||||||||\n")
    with pytest.raises(ParseError):
        parse_records(b"1||||||||\n")


def test_import_relaxed_rules(tmp_path):
    p = tmp_path / "ext.rec"
    p.write_text("1|||||0:0,1:0,0:0,1:1|0:0,0:1,1:1||\n")
    [(mp, pp)] = import_external_pathpairs(p, 2, 2)
    assert mp is None and pp.original.steps[2] == (0, 0)

    p.write_text("1|||||0:0,2:2|0:0||\n")
    with pytest.raises(NonAdjacentStep) as exc:
        import_external_pathpairs(p, 3, 3)
    assert isinstance(exc.value, ParseError) and exc.value.line == 1

    full = random_records(8, 30)
    with_all = [r for r in full if r.map_o and r.path_o]
    path, _ = write(tmp_path, with_all)
    pairs = import_external_pathpairs(path)
    assert len(pairs) == len(with_all)
    for (mp, pp), r in zip(pairs, with_all):
        assert mp == r.map_pair(28, 28) and pp == r.path_pair()

    p.write_text("1||||||||\n")
    with pytest.raises(ParseError):
        import_external_records(p, 2, 2)


def test_record_accessors():
    r = random_records(9, 40)
    full = next(x for x in r if x.label)
    assert full.has_maps and full.has_paths
    assert full.goal_cell() == full.map_pair(28, 28).original.goal
    assert full.with_label(None).label == "" and full.with_label(None).attack == ""
    with pytest.raises(ValueError):
        Record(1).path_pair()
    assert np.all([x.attack in ("", "0", "1") for x in r])
