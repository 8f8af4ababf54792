"""Feature extraction: demographic (D), behavioral (B) and linguistic (L) families.

Window-scoped features only look at posts with
``survey_time - before <= timestamp <= survey_time + after``.
Ratios with an empty denominator are 0.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .corpus import Dataset, Profile, UserRecord
from .lexicon import CategoryCounts, Lexicon, count_categories, segment

DAY = 86400
WEEK = 7 * DAY
FAMILIES = ("D", "B", "L")

DEMOGRAPHIC = ("gender", "age", "living_place")
BEHAVIORAL = (
    "followers_count",
    "followees_count",
    "bi_followers_count",
    "followers_to_followees_ratio",
    "bi_follow_ratio",
    "statuses_count",
    "favourites_count",
    "posts_in_window",
    "repost_ratio",
    "original_posts_in_window",
    "mean_post_length",
    "mean_posts_per_day",
    "night_post_ratio",
    "weekend_post_ratio",
    "mention_ratio",
    "link_ratio",
    "hashtag_ratio",
    "emoticon_ratio",
    "mean_comments_received",
    "mean_reposts_received",
    "geo_enabled",
    "allow_all_comment",
    "allow_all_act_msg",
    "nickname_length",
    "description_length",
    "account_age_days",
)
LIVING_PLACE_CODE = {"first_tier": 3.0, "other_city": 2.0, "rural": 1.0}

MENTION_RE = re.compile(r"@\w")
HASHTAG_RE = re.compile(r"#[^#\s]+#")
URL_RE = re.compile(r"https?://")
EMOTICON_RE = re.compile(r"\[[^\[\]\s]+\]")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class WindowSpec:
    before: int = WEEK
    after: int = WEEK

    def __post_init__(self):
        if self.before < 0 or self.after < 0:
            raise ValueError("window durations must be non-negative")

    @classmethod
    def days(cls, before: float = 7, after: float = 7) -> "WindowSpec":
        return cls(int(round(before * DAY)), int(round(after * DAY)))

    def posts(self, record: UserRecord) -> list:
        lo, hi = record.survey_time - self.before, record.survey_time + self.after
        return [p for p in record.posts if lo <= p.timestamp <= hi]

    def to_json(self) -> dict:
        return {"before": self.before, "after": self.after}


def linguistic_names(lexicon: Lexicon) -> tuple:
    return tuple(f"lex_{name}" for name in lexicon.category_names)


@dataclass(frozen=True)
class FeatureRegistry:
    names: tuple
    families: tuple

    @classmethod
    def for_lexicon(cls, lexicon: Lexicon | None) -> "FeatureRegistry":
        ling = linguistic_names(lexicon) if lexicon is not None else ()
        names = DEMOGRAPHIC + BEHAVIORAL + ling
        fams = ("D",) * len(DEMOGRAPHIC) + ("B",) * len(BEHAVIORAL) + ("L",) * len(ling)
        if len(set(names)) != len(names):
            raise FeatureError("feature names are not unique")
        return cls(names, fams)

    def counts(self) -> dict:
        return {f: self.families.count(f) for f in FAMILIES}

    def select(self, families) -> list[str]:
        families = set(families)
        return [n for n, f in zip(self.names, self.families) if f in families]


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def extract_demographic(profile: Profile) -> dict:
    return {
        "gender": 1.0 if profile.gender == "male" else 0.0,
        "age": float(profile.age),
        "living_place": LIVING_PLACE_CODE[profile.living_place],
    }


def extract_behavioral(record: UserRecord, window: WindowSpec = WindowSpec()) -> dict:
    p = record.profile
    posts = window.posts(record)
    n = len(posts)
    reposts = sum(post.is_repost for post in posts)
    night = weekend = 0
    for post in posts:
        t = datetime.fromtimestamp(post.timestamp, tz=timezone.utc)
        night += t.hour < 6
        weekend += t.weekday() >= 5
    span_days = (window.before + window.after) / DAY
    return {
        "followers_count": float(p.followers_count),
        "followees_count": float(p.followees_count),
        "bi_followers_count": float(p.bi_followers_count),
        "followers_to_followees_ratio": _ratio(p.followers_count, p.followees_count),
        "bi_follow_ratio": _ratio(p.bi_followers_count, p.followees_count),
        "statuses_count": float(p.statuses_count),
        "favourites_count": float(p.favourites_count),
        "posts_in_window": float(n),
        "repost_ratio": _ratio(reposts, n),
        "original_posts_in_window": float(n - reposts),
        "mean_post_length": _ratio(sum(len(post.text) for post in posts), n),
        "mean_posts_per_day": _ratio(n, span_days),
        "night_post_ratio": _ratio(night, n),
        "weekend_post_ratio": _ratio(weekend, n),
        "mention_ratio": _ratio(sum(bool(MENTION_RE.search(post.text)) for post in posts), n),
        "link_ratio": _ratio(sum(bool(URL_RE.search(post.text)) for post in posts), n),
        "hashtag_ratio": _ratio(sum(bool(HASHTAG_RE.search(post.text)) for post in posts), n),
        "emoticon_ratio": _ratio(sum(bool(EMOTICON_RE.search(post.text)) for post in posts), n),
        "mean_comments_received": _ratio(sum(post.comments_received for post in posts), n),
        "mean_reposts_received": _ratio(sum(post.reposts_received for post in posts), n),
        "geo_enabled": float(p.geo_enabled),
        "allow_all_comment": float(p.allow_all_comment),
        "allow_all_act_msg": float(p.allow_all_act_msg),
        "nickname_length": float(len(p.nickname)),
        "description_length": float(len(p.description)),
        "account_age_days": (record.survey_time - p.account_created_at) / DAY,
    }


def window_category_counts(record: UserRecord, window: WindowSpec, lexicon: Lexicon) -> CategoryCounts:
    # posts are segmented one at a time so no token spans two posts
    total = CategoryCounts(np.zeros(lexicon.size), 0)
    for post in window.posts(record):
        total = total + count_categories(segment(post.text, lexicon), lexicon)
    return total


def extract_linguistic(record: UserRecord, window: WindowSpec, lexicon: Lexicon) -> dict:
    props = window_category_counts(record, window, lexicon).proportions()
    return dict(zip(linguistic_names(lexicon), props.tolist()))


@dataclass(frozen=True)
class FeatureMatrix:
    user_ids: tuple
    columns: tuple
    values: np.ndarray
    window: WindowSpec | None = None
    families: tuple = field(default=())

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def column_index(self, names) -> list[int]:
        lookup = {c: i for i, c in enumerate(self.columns)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise FeatureError(f"missing feature columns: {missing}")
        return [lookup[n] for n in names]

    def select_columns(self, names) -> "FeatureMatrix":
        idx = self.column_index(names)
        return FeatureMatrix(self.user_ids, tuple(names), self.values[:, idx], self.window, self.families)

    def select_families(self, families, registry: FeatureRegistry) -> "FeatureMatrix":
        names = [n for n in registry.select(families) if n in set(self.columns)]
        fams = tuple(f for f in FAMILIES if f in set(families))
        return FeatureMatrix(self.user_ids, tuple(names), self.values[:, self.column_index(names)],
                             self.window, fams)

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (self.user_ids == other.user_ids and self.columns == other.columns
                and self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values)))

    __hash__ = None


def parse_families(spec) -> tuple:
    """``"D,B,L"``, ``"D+B"`` or an iterable of letters -> canonical ordered tuple."""
    if isinstance(spec, str):
        letters = [ch.upper() for ch in spec if not (ch in ",+" or ch.isspace())]
    else:
        letters = [str(x).strip().upper() for x in spec]
    bad = [x for x in letters if x not in FAMILIES]
    if bad:
        raise FeatureError(f"unknown feature families {bad}; expected a subset of D, B, L")
    if not letters:
        raise FeatureError("at least one feature family is required")
    return tuple(f for f in FAMILIES if f in letters)


def family_label(families) -> str:
    return "+".join(parse_families(families))


def user_features(record: UserRecord, families, window: WindowSpec, lexicon: Lexicon | None) -> list[float]:
    row = []
    if "D" in families:
        row.extend(extract_demographic(record.profile).values())
    if "B" in families:
        row.extend(extract_behavioral(record, window).values())
    if "L" in families:
        row.extend(extract_linguistic(record, window, lexicon).values())
    return row


def build_matrix(dataset: Dataset, families=FAMILIES, window: WindowSpec = WindowSpec(),
                 lexicon: Lexicon | None = None) -> FeatureMatrix:
    families = parse_families(families)
    if "L" in families and lexicon is None:
        raise FeatureError("linguistic features (L) requested but no lexicon was given")
    registry = FeatureRegistry.for_lexicon(lexicon)
    names = tuple(registry.select(families))
    rows = [user_features(r, families, window, lexicon) for r in dataset.records]
    values = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return FeatureMatrix(tuple(r.user_id for r in dataset.records), names, values, window, families)


# -- min-max normalization ----------------------------------------------------

@dataclass(frozen=True)
class NormalizationParams:
    columns: tuple
    minimum: np.ndarray
    maximum: np.ndarray

    def to_json(self) -> dict:
        return {"columns": list(self.columns), "min": self.minimum.tolist(), "max": self.maximum.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizationParams":
        lo, hi = np.asarray(obj["min"], dtype=float), np.asarray(obj["max"], dtype=float)
        if np.any(lo > hi):
            raise FeatureError("normalization params have min > max")
        return cls(tuple(obj["columns"]), lo, hi)


def fit_normalization(matrix: FeatureMatrix, rows=None) -> NormalizationParams:
    values = matrix.values if rows is None else matrix.values[np.asarray(rows, dtype=int)]
    if values.shape[0] == 0:
        raise FeatureError("cannot fit normalization on zero rows")
    return NormalizationParams(matrix.columns, values.min(axis=0), values.max(axis=0))


def normalize_values(values: np.ndarray, params: NormalizationParams) -> np.ndarray:
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    out = (values - params.minimum) / safe
    out[:, span <= 0] = 0.0
    return np.clip(out, 0.0, 1.0)


def apply_normalization(matrix: FeatureMatrix, params: NormalizationParams) -> FeatureMatrix:
    if tuple(matrix.columns) != tuple(params.columns):
        raise FeatureError("normalization params were fit on different columns")
    return FeatureMatrix(matrix.user_ids, matrix.columns, normalize_values(matrix.values, params),
                         matrix.window, matrix.families)


# -- file formats -------------------------------------------------------------

def write_matrix_csv(matrix: FeatureMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", *matrix.columns])
        for uid, row in zip(matrix.user_ids, matrix.values):
            w.writerow([uid, *(repr(float(v)) for v in row)])


def read_matrix_csv(path) -> FeatureMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["user_id"]:
        raise FeatureError(f"{path}: expected a header starting with user_id")
    columns = tuple(rows[0][1:])
    body = rows[1:]
    values = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(len(body), len(columns))
    return FeatureMatrix(tuple(r[0] for r in body), columns, values)


def write_params_json(params: NormalizationParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_json(), fh, indent=2)
        fh.write("\n")


def read_params_json(path) -> NormalizationParams:
    with open(path, encoding="utf-8") as fh:
        return NormalizationParams.from_json(json.load(fh))
