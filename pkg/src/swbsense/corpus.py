"""Corpus schema and the line-delimited JSON dataset format.

A dataset file holds one metadata header line followed by one JSON object
per user record. Timestamps are integer UTC seconds.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1

# Fixed dimension order; abbreviations double as report column headers.
DIMENSIONS = (
    "positive_affect",
    "negative_affect",
    "self_acceptance",
    "purpose_in_life",
    "environmental_mastery",
    "positive_relations",
    "personal_growth",
    "autonomy",
)
ABBREVIATIONS = dict(zip(DIMENSIONS, ("P.A.", "N.A.", "S.A.", "P.L.", "E.M.", "P.R.", "P.G.", "A.I.")))

GENDERS = ("male", "female")
LIVING_PLACES = ("first_tier", "other_city", "rural")

DEFAULT_LABEL_RANGE = (10, 50)


class DatasetError(ValueError):
    """Malformed dataset file or a violated schema invariant."""


@dataclass(frozen=True)
class SwbLabels:
    positive_affect: int
    negative_affect: int
    self_acceptance: int
    purpose_in_life: int
    environmental_mastery: int
    positive_relations: int
    personal_growth: int
    autonomy: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, d) for d in DIMENSIONS)

    def __getitem__(self, dimension: str) -> int:
        if dimension not in DIMENSIONS:
            raise KeyError(dimension)
        return getattr(self, dimension)


@dataclass(frozen=True)
class Profile:
    user_id: str
    gender: str
    age: int
    living_place: str
    nickname: str
    description: str
    followers_count: int
    followees_count: int
    bi_followers_count: int
    statuses_count: int
    favourites_count: int
    geo_enabled: bool
    allow_all_comment: bool
    allow_all_act_msg: bool
    account_created_at: int


@dataclass(frozen=True)
class Post:
    timestamp: int
    text: str
    is_repost: bool = False
    mentions_count: int = 0
    urls_count: int = 0
    hashtags_count: int = 0
    comments_received: int = 0
    reposts_received: int = 0


@dataclass(frozen=True)
class UserRecord:
    profile: Profile
    posts: tuple
    survey_time: int
    labels: SwbLabels

    @property
    def user_id(self) -> str:
        return self.profile.user_id


@dataclass(frozen=True)
class Metadata:
    schema_version: int
    label_ranges: dict
    n_records: int
    gender_counts: dict
    living_place_counts: dict

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "label_ranges": {d: list(self.label_ranges[d]) for d in DIMENSIONS},
            "n_records": self.n_records,
            "gender_counts": {g: self.gender_counts.get(g, 0) for g in GENDERS},
            "living_place_counts": {p: self.living_place_counts.get(p, 0) for p in LIVING_PLACES},
        }


@dataclass(frozen=True)
class Dataset:
    metadata: Metadata
    records: tuple = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.records)

    def label_column(self, dimension: str) -> list[int]:
        return [r.labels[dimension] for r in self.records]


def default_label_ranges() -> dict:
    return {d: DEFAULT_LABEL_RANGE for d in DIMENSIONS}


def make_metadata(records, label_ranges=None) -> Metadata:
    label_ranges = label_ranges or default_label_ranges()
    genders = Counter(r.profile.gender for r in records)
    places = Counter(r.profile.living_place for r in records)
    return Metadata(
        schema_version=SCHEMA_VERSION,
        label_ranges={d: tuple(label_ranges[d]) for d in DIMENSIONS},
        n_records=len(records),
        gender_counts={g: genders.get(g, 0) for g in GENDERS},
        living_place_counts={p: places.get(p, 0) for p in LIVING_PLACES},
    )


def make_dataset(records, label_ranges=None) -> Dataset:
    records = tuple(records)
    ds = Dataset(make_metadata(records, label_ranges), records)
    validate_dataset(ds)
    return ds


def filter_active(dataset: Dataset, threshold: int = 500) -> Dataset:
    """Keep users whose statuses_count is strictly above ``threshold``."""
    kept = [r for r in dataset.records if r.profile.statuses_count > threshold]
    return make_dataset(kept, dataset.metadata.label_ranges)


# -- validation ---------------------------------------------------------------

def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate_record(rec: UserRecord, label_ranges: dict) -> None:
    p = rec.profile
    uid = p.user_id

    def fail(rule):
        raise DatasetError(f"record {uid!r}: {rule}")

    if not isinstance(uid, str) or not uid:
        fail("user_id must be a non-empty string")
    if p.gender not in GENDERS:
        fail(f"gender must be one of {GENDERS}, got {p.gender!r}")
    if p.living_place not in LIVING_PLACES:
        fail(f"living_place must be one of {LIVING_PLACES}, got {p.living_place!r}")
    if not _is_int(p.age) or p.age < 18:
        fail(f"age must be an integer >= 18, got {p.age!r}")
    for name in ("followers_count", "followees_count", "bi_followers_count",
                 "statuses_count", "favourites_count", "account_created_at"):
        v = getattr(p, name)
        if not _is_int(v) or v < 0:
            fail(f"{name} must be a non-negative integer, got {v!r}")
    if p.bi_followers_count > p.followees_count:
        fail("bi_followers_count exceeds followees_count")
    for name in ("geo_enabled", "allow_all_comment", "allow_all_act_msg"):
        if not isinstance(getattr(p, name), bool):
            fail(f"{name} must be a boolean")
    if not isinstance(p.nickname, str) or not isinstance(p.description, str):
        fail("nickname and description must be strings")
    if not _is_int(rec.survey_time):
        fail("survey_time must be an integer timestamp")

    prev = None
    for i, post in enumerate(rec.posts):
        if not _is_int(post.timestamp):
            fail(f"post {i}: timestamp must be an integer")
        if prev is not None and post.timestamp < prev:
            fail(f"post {i}: posts are not sorted by timestamp")
        prev = post.timestamp
        if post.timestamp < p.account_created_at:
            fail(f"post {i}: timestamp precedes account_created_at")
        for name in ("mentions_count", "urls_count", "hashtags_count",
                     "comments_received", "reposts_received"):
            v = getattr(post, name)
            if not _is_int(v) or v < 0:
                fail(f"post {i}: {name} must be a non-negative integer")
        if not isinstance(post.is_repost, bool):
            fail(f"post {i}: is_repost must be a boolean")
        if not isinstance(post.text, str):
            fail(f"post {i}: text must be a string")
        if post.text == "" and not post.is_repost:
            fail(f"post {i}: empty text on an original post")
    if rec.posts and rec.survey_time < rec.posts[0].timestamp:
        fail("survey_time precedes the first post")

    for d in DIMENSIONS:
        v = rec.labels[d]
        lo, hi = label_ranges[d]
        if not _is_int(v) or not lo <= v <= hi:
            fail(f"label {d}={v!r} outside declared range [{lo}, {hi}]")


def validate_dataset(ds: Dataset) -> None:
    meta = ds.metadata
    for d in DIMENSIONS:
        if d not in meta.label_ranges:
            raise DatasetError(f"metadata: missing label range for {d}")
        lo, hi = meta.label_ranges[d]
        if not (_is_int(lo) and _is_int(hi) and lo <= hi):
            raise DatasetError(f"metadata: bad label range for {d}: {(lo, hi)}")
    seen = set()
    for rec in ds.records:
        if rec.user_id in seen:
            raise DatasetError(f"duplicate user_id {rec.user_id!r}")
        seen.add(rec.user_id)
        validate_record(rec, meta.label_ranges)
    expected = make_metadata(ds.records, meta.label_ranges)
    if meta.n_records != expected.n_records:
        raise DatasetError(
            f"metadata says {meta.n_records} records but the file holds {expected.n_records}")
    if meta.gender_counts != expected.gender_counts:
        raise DatasetError(f"metadata gender counts {meta.gender_counts} != recomputed {expected.gender_counts}")
    if meta.living_place_counts != expected.living_place_counts:
        raise DatasetError(
            f"metadata living place counts {meta.living_place_counts} != recomputed {expected.living_place_counts}")


# -- (de)serialization --------------------------------------------------------

def record_to_json(rec: UserRecord) -> dict:
    return {
        "profile": asdict(rec.profile),
        "survey_time": rec.survey_time,
        "labels": {d: rec.labels[d] for d in DIMENSIONS},
        "posts": [asdict(p) for p in rec.posts],
    }


def record_from_json(obj: dict) -> UserRecord:
    try:
        profile = Profile(**obj["profile"])
        posts = tuple(Post(**p) for p in obj["posts"])
        labels = SwbLabels(**{d: obj["labels"][d] for d in DIMENSIONS})
        return UserRecord(profile, posts, obj["survey_time"], labels)
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"bad record structure: {exc}") from exc


def metadata_from_json(obj: dict) -> Metadata:
    try:
        return Metadata(
            schema_version=obj["schema_version"],
            label_ranges={d: tuple(obj["label_ranges"][d]) for d in DIMENSIONS},
            n_records=obj["n_records"],
            gender_counts=dict(obj["gender_counts"]),
            living_place_counts=dict(obj["living_place_counts"]),
        )
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"bad metadata header: {exc}") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_dataset(dataset: Dataset, path) -> None:
    validate_dataset(dataset)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(dataset.metadata.to_json()) + "\n")
        for rec in dataset.records:
            fh.write(_dumps(record_to_json(rec)) + "\n")


def load_dataset(path) -> Dataset:
    path = Path(path)
    records = []
    meta = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if meta is None:
                meta = metadata_from_json(obj)
                if meta.schema_version != SCHEMA_VERSION:
                    raise DatasetError(f"{path}:{lineno}: unsupported schema version {meta.schema_version}")
                continue
            try:
                records.append(record_from_json(obj))
            except DatasetError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    if meta is None:
        raise DatasetError(f"{path}: missing metadata header line")
    ds = Dataset(meta, tuple(records))
    validate_dataset(ds)
    return ds
