"""Line-oriented dataset files with a hash-verified JSON manifest.

Record file grammar (UTF-8, ``\\n`` line endings)::

    #advpath-records v1 grid=<W>x<H> fields=no|map_o|map_a|start|goal|path_o|path_a|label|attack
    <no>|<map_o>|<map_a>|<start>|<goal>|<path_o>|<path_a>|<label>|<attack>
    ...

``map_*``   row-major 0/1 occupancy, ``W*H`` characters, ``1`` = obstacle
``start``, ``goal``  one ``x:y`` token
``path_*``  comma separated ``x:y`` tokens
``label``   UrP, FP, DP, UcP or empty; ``attack`` 1, 0 or empty

Any field except ``no`` may be empty: maps before generation is complete,
paths before planning, label/attack before labelling. The manifest lives
next to the record file as ``<file>.manifest.json``.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath

from .gridworld import (
    Cell,
    GridMap,
    MapPair,
    NonAdjacentStep,
    PathPair,
    Scenario,
    ValidationError,
    decode_cell,
    decode_map,
    decode_path,
    encode_cell,
    encode_map,
    encode_path,
    validate_map_pair,
    validate_steps,
)
from .taxonomy import Label, attack_verdict

FORMAT = "advpath-records v1"
FIELDS = ("no", "map_o", "map_a", "start", "goal", "path_o", "path_a", "label", "attack")
MANIFEST_SUFFIX = ".manifest.json"


class DatasetError(Exception):
    pass


class ParseError(DatasetError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DimensionMismatch(ParseError):
    pass


class NonAdjacentRecord(ParseError, NonAdjacentStep):
    """A record path jumps more than one cell between steps."""


class HashMismatch(DatasetError):
    pass


class InvariantViolation(DatasetError):
    pass


class IoFailure(DatasetError):
    pass


@dataclass(frozen=True)
class Record:
    no: int
    map_o: str = ""
    map_a: str = ""
    start: str = ""
    goal: str = ""
    path_o: str = ""
    path_a: str = ""
    label: str = ""
    attack: str = ""

    @classmethod
    def from_pairs(cls, mp: MapPair | None, pp: PathPair | None = None,
                   label: Label | str | None = None, no: int | None = None) -> "Record":
        if mp is None and no is None:
            raise ValueError("record number needed when there is no map pair")
        rec = cls(no=mp.id if no is None else no)
        if mp is not None:
            rec = replace(
                rec,
                map_o=encode_map(mp.original.map),
                map_a=encode_map(mp.adversarial.map),
                start=encode_cell(mp.original.start),
                goal=encode_cell(mp.original.goal),
            )
        if pp is not None:
            rec = rec.with_paths(pp)
        if label is not None:
            rec = rec.with_label(label)
        return rec

    def with_paths(self, pp: PathPair) -> "Record":
        return replace(self, path_o=encode_path(pp.original), path_a=encode_path(pp.adversarial))

    def with_label(self, label: Label | str | None) -> "Record":
        if label is None or label == "":
            return replace(self, label="", attack="")
        label = Label(label)
        return replace(self, label=label.value, attack="1" if attack_verdict(label) else "0")

    @property
    def has_maps(self) -> bool:
        return bool(self.map_o)

    @property
    def has_paths(self) -> bool:
        return bool(self.path_o)

    def goal_cell(self) -> Cell | None:
        return decode_cell(self.goal) if self.goal else None

    def map_pair(self, width: int, height: int) -> MapPair:
        if not self.has_maps:
            raise ValueError(f"record {self.no} has no maps")
        start, goal = decode_cell(self.start), decode_cell(self.goal)
        return MapPair(
            self.no,
            Scenario(decode_map(self.map_o, width, height), start, goal),
            Scenario(decode_map(self.map_a, width, height), start, goal),
        )

    def path_pair(self) -> PathPair:
        if not self.has_paths:
            raise ValueError(f"record {self.no} has no paths")
        return PathPair(decode_path(self.path_o), decode_path(self.path_a))

    def to_line(self) -> str:
        return "|".join([str(self.no), *(getattr(self, f) for f in FIELDS[1:])])


@dataclass(frozen=True)
class Manifest:
    dataset_id: str
    width: int
    height: int
    record_count: int = 0
    content_hash: str = ""
    created: str = ""
    gen_config: dict | None = None
    planner_config: dict | None = None
    taxonomy_config: dict | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = {
            "format": FORMAT,
            "dataset_id": self.dataset_id,
            "grid": {"width": self.width, "height": self.height},
            "record_count": self.record_count,
            "content_hash": self.content_hash,
            "created": self.created,
            "gen_config": self.gen_config,
            "planner_config": self.planner_config,
            "taxonomy_config": self.taxonomy_config,
            "extra": self.extra,
        }
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        try:
            d = json.loads(text)
            return cls(
                dataset_id=d["dataset_id"],
                width=int(d["grid"]["width"]),
                height=int(d["grid"]["height"]),
                record_count=int(d["record_count"]),
                content_hash=d["content_hash"],
                created=d.get("created", ""),
                gen_config=d.get("gen_config"),
                planner_config=d.get("planner_config"),
                taxonomy_config=d.get("taxonomy_config"),
                extra=d.get("extra") or {},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed manifest: {exc}") from None


def creation_timestamp() -> str:
    """UTC timestamp; honours SOURCE_DATE_EPOCH for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def manifest_path(path) -> FsPath:
    path = FsPath(path)
    return path.with_name(path.name + MANIFEST_SUFFIX)


def content_hash(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def header_line(width: int, height: int) -> str:
    return f"#{FORMAT} grid={width}x{height} fields={'|'.join(FIELDS)}"


def atomic_write_bytes(path, data: bytes) -> None:
    path = FsPath(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- validation --------------------------------------------------------------

def _check_map(text: str, width: int, height: int, name: str) -> GridMap:
    if len(text) != width * height:
        raise DimensionMismatch(f"{name} has {len(text)} cells, grid is {width}x{height}")
    try:
        return decode_map(text, width, height)
    except ValueError as exc:
        raise InvariantViolation(f"{name}: {exc}") from None


def check_record(rec: Record, width: int, height: int, *, simple_paths: bool = False) -> None:
    """Raise if ``rec`` breaks a record invariant.

    Paths are checked for bounds and 8-adjacency; ``simple_paths`` also
    rejects revisits.
    """
    try:
        if bool(rec.map_o) != bool(rec.map_a):
            raise InvariantViolation("map_o and map_a must both be present or both empty")
        if bool(rec.path_o) != bool(rec.path_a):
            raise InvariantViolation("path_o and path_a must both be present or both empty")
        if bool(rec.label) != bool(rec.attack):
            raise InvariantViolation("label and attack must both be present or both empty")
        if rec.label:
            try:
                label = Label(rec.label)
            except ValueError:
                raise InvariantViolation(f"unknown label {rec.label!r}") from None
            if rec.attack not in ("0", "1"):
                raise InvariantViolation(f"attack must be 0 or 1, got {rec.attack!r}")
            if (rec.attack == "1") != attack_verdict(label):
                raise InvariantViolation(f"label {label.value} is inconsistent with attack={rec.attack}")
        grid = GridMap(width, height)
        for name in ("start", "goal"):
            value = getattr(rec, name)
            if value:
                c = decode_cell(value)
                if not grid.in_bounds(c):
                    raise InvariantViolation(f"{name} {c} outside grid")
        if rec.map_o:
            _check_map(rec.map_o, width, height, "map_o")
            _check_map(rec.map_a, width, height, "map_a")
            if not (rec.start and rec.goal):
                raise InvariantViolation("maps present without start and goal")
            validate_map_pair(rec.map_pair(width, height))
        if rec.path_o:
            po, pa = decode_path(rec.path_o), decode_path(rec.path_a)
            validate_steps(po.steps, grid, simple=simple_paths)
            validate_steps(pa.steps, grid, simple=simple_paths)
            if po.start != pa.start:
                raise InvariantViolation("paths start at different cells")
            if rec.start and po.start != decode_cell(rec.start):
                raise InvariantViolation("paths do not begin at the start cell")
    except DatasetError:
        raise
    except ValidationError as exc:
        raise InvariantViolation(f"record {rec.no}: {exc}") from exc
    except ValueError as exc:
        raise InvariantViolation(f"record {rec.no}: {exc}") from exc


# -- writing -----------------------------------------------------------------

def dumps_records(records, width: int, height: int) -> bytes:
    lines = [header_line(width, height)]
    lines.extend(r.to_line() for r in records)
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_records(path, records, manifest: Manifest) -> Manifest:
    """Validate and persist ``records``; returns the manifest actually written."""
    records = list(records)
    prev = None
    for r in records:
        if prev is not None and r.no <= prev:
            raise InvariantViolation(f"record numbers must increase strictly ({prev} then {r.no})")
        prev = r.no
        check_record(r, manifest.width, manifest.height)
    data = dumps_records(records, manifest.width, manifest.height)
    final = replace(
        manifest,
        record_count=len(records),
        content_hash=content_hash(data),
        created=manifest.created or creation_timestamp(),
    )
    atomic_write_bytes(path, data)
    atomic_write_text(manifest_path(path), final.to_json())
    return final


# -- reading -----------------------------------------------------------------

def _parse_header(line: str) -> tuple[int, int]:
    if not line.startswith("#" + FORMAT + " "):
        raise ParseError("missing or unknown header", 1)
    parts = dict(p.split("=", 1) for p in line[1 + len(FORMAT):].split() if "=" in p)
    try:
        ws, hs = parts["grid"].split("x")
        dims = int(ws), int(hs)
    except (KeyError, ValueError):
        raise ParseError("header has no valid grid=WxH", 1) from None
    if parts.get("fields") != "|".join(FIELDS):
        raise ParseError("header field list does not match this format", 1)
    return dims


def _parse_line(line: str, lineno: int, width: int, height: int, simple_paths: bool) -> Record:
    parts = line.split("|")
    if len(parts) != len(FIELDS):
        raise ParseError(f"expected {len(FIELDS)} fields, found {len(parts)}", lineno)
    if not parts[0].isdigit():
        raise ParseError(f"record number {parts[0]!r} is not an integer", lineno)
    rec = Record(int(parts[0]), *parts[1:])
    try:
        check_record(rec, width, height, simple_paths=simple_paths)
    except DimensionMismatch as exc:
        raise DimensionMismatch(str(exc), lineno) from None
    except InvariantViolation as exc:
        if isinstance(exc.__cause__, NonAdjacentStep):
            raise NonAdjacentRecord(str(exc), lineno) from exc.__cause__
        raise ParseError(str(exc), lineno) from exc
    return rec


def parse_records(data: bytes, *, dims: tuple[int, int] | None = None,
                  simple_paths: bool = False, require_header: bool = True):
    """Parse record-file bytes into ``(records, (width, height))``."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    first = 1
    if lines and lines[0].startswith("#"):
        width, height = _parse_header(lines[0])
        first = 2
    elif require_header:
        raise ParseError("missing header", 1)
    elif dims is None:
        raise ParseError("grid dimensions unknown: no header and none given")
    else:
        width, height = dims
    if dims is not None and (width, height) != tuple(dims):
        raise DimensionMismatch(f"file grid is {width}x{height}, expected {dims[0]}x{dims[1]}", 1)
    records = []
    seen = set()
    for lineno, line in enumerate(lines[first - 1:], start=first):
        rec = _parse_line(line, lineno, width, height, simple_paths)
        if rec.no in seen:
            raise ParseError(f"duplicate record number {rec.no}", lineno)
        seen.add(rec.no)
        records.append(rec)
    return records, (width, height)


def read_records(path, dims: tuple[int, int] | None = None):
    """Load and verify a dataset; returns ``(records, manifest)``."""
    path = FsPath(path)
    try:
        data = path.read_bytes()
        mtext = manifest_path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    manifest = Manifest.from_json(mtext)
    records, (w, h) = parse_records(data, dims=dims)
    if (w, h) != (manifest.width, manifest.height):
        raise DimensionMismatch(
            f"records are {w}x{h} but manifest says {manifest.width}x{manifest.height}"
        )
    actual = content_hash(data)
    if actual != manifest.content_hash:
        raise HashMismatch(f"{path}: content hash {actual} != manifest {manifest.content_hash}")
    if len(records) != manifest.record_count:
        raise HashMismatch(f"{path}: {len(records)} records, manifest says {manifest.record_count}")
    return records, manifest


def import_external_records(path, width: int = 28, height: int = 28) -> list:
    """Records from an external planner; paths need only be 8-adjacent."""
    try:
        data = FsPath(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    records, _ = parse_records(data, dims=(width, height), require_header=False)
    for i, r in enumerate(records):
        if not r.has_paths:
            raise ParseError(f"record {r.no} has no paths", i + 2)
    return records


def import_external_pathpairs(path, width: int = 28, height: int = 28) -> list:
    """``[(MapPair or None, PathPair), ...]`` from an external record file."""
    out = []
    for r in import_external_records(path, width, height):
        mp = r.map_pair(width, height) if r.has_maps else None
        out.append((mp, r.path_pair()))
    return out
