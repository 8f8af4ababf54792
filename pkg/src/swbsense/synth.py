"""Synthetic corpora with planted label structure.

Each user gets randomly drawn profile fields and posting habits, and posts
whose words are sampled from the lexicon (plus filler words) according to
a per-user category mix. Labels are then planted on top of the features
the pipeline itself extracts::

    score_d = clamp(round(center_d + sum_f w_df * z_f + noise_sd * e))

where ``z_f`` is feature ``f`` standardized over the generated users and
``e`` is a gaussian draw residualized on every extracted feature and scaled
to unit sd, so ``noise_sd`` sets the in-sample signal-to-noise ratio exactly
rather than up to sampling error. With ``noise_sd = 0`` the labels are an
exact linear function of the features up to rounding.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import (DIMENSIONS, GENDERS, LIVING_PLACES, Dataset, Post, Profile, SwbLabels, UserRecord,
                     default_label_ranges, make_dataset)
from .features import DAY, FAMILIES, WindowSpec, build_matrix
from .lexicon import Lexicon, load_demo_lexicon, parse_lexicon
from .numerics import make_rng

# 2012-10-01T00:00:00Z
SURVEY_EPOCH = 1349049600

# 1785 volunteers: 1136 female; 1009 first-tier, 650 other city, 126 rural
REFERENCE_FEMALE_SHARE = 1136 / 1785
REFERENCE_PLACE_SHARES = (1009 / 1785, 650 / 1785, 126 / 1785)

FILLER = ("天气", "地铁", "咖啡", "吃饭", "手机", "早上", "晚上", "城市", "微博", "照片", "分享", "一起",
          "这个", "那个", "什么", "真的", "还是", "已经", "没有", "一下", "时候", "东西", "学校", "公司")
EMOTICONS = ("[哈哈]", "[泪]", "[嘻嘻]", "[抓狂]", "[爱你]", "[衰]", "[赞]")
TOPICS = ("#周末#", "#美食#", "#旅行#", "#加班#", "#电影#")
NICK_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789小大王李张的猫鱼星月"


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    n_users: int = 200
    posts_mean: float = 40.0               # mean posts per user over the whole span
    post_span_days: float = 28.0           # posts fall within this many days of the survey
    words_per_post: float = 10.0
    lexical_share: float = 0.5             # mean share of post words drawn from the lexicon
    survey_days: float = 30.0              # survey times spread over this many days from the epoch
    paper_marginals: bool = False
    active_only: bool = True               # every statuses_count above 500
    label_ranges: dict = field(default_factory=default_label_ranges)
    label_center: float = 30.0
    noise_sd: float = 6.0
    weights: dict = field(default_factory=dict)   # {dimension: {feature: weight on z-scored feature}}
    lexicon: str | None = None             # .dic path; None means the bundled demo lexicon

    def validate(self) -> None:
        if self.n_users < 0:
            raise GeneratorError("n_users must be non-negative")
        if self.noise_sd < 0:
            raise GeneratorError("noise_sd must be non-negative")
        if self.posts_mean < 0 or self.words_per_post <= 0 or self.post_span_days <= 0:
            raise GeneratorError("posts_mean, words_per_post and post_span_days must be positive")
        if not 0 <= self.lexical_share <= 1:
            raise GeneratorError("lexical_share must lie in [0, 1]")
        for d in DIMENSIONS:
            lo, hi = self.label_ranges[d]
            if lo > hi:
                raise GeneratorError(f"label range for {d} is empty")
        unknown = [d for d in self.weights if d not in DIMENSIONS]
        if unknown:
            raise GeneratorError(f"weights for unknown dimensions {unknown}")

    def to_json(self) -> dict:
        out = asdict(self)
        out["label_ranges"] = {d: list(self.label_ranges[d]) for d in DIMENSIONS}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorConfig":
        obj = dict(obj)
        obj.pop("description", None)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(obj) - known)
        if unknown:
            raise GeneratorError(f"unknown generator config keys {unknown}")
        if "label_ranges" in obj:
            ranges = default_label_ranges()
            ranges.update({d: tuple(v) for d, v in obj["label_ranges"].items()})
            obj["label_ranges"] = ranges
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "GeneratorConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def demo_config_path() -> Path:
    return Path(str(resources.files("swbsense") / "data" / "generator_demo.json"))


def demo_config(**overrides) -> GeneratorConfig:
    """The bundled configuration: weak demographic signal, most signal in B and L."""
    cfg = GeneratorConfig.load(demo_config_path())
    return GeneratorConfig(**{**cfg.__dict__, **overrides})


def _lexicon_for(config: GeneratorConfig) -> Lexicon:
    return load_demo_lexicon() if config.lexicon is None else parse_lexicon(config.lexicon)


def _category_words(lexicon: Lexicon) -> list[list[str]]:
    words = [[] for _ in range(lexicon.size)]
    for w, cats in sorted(lexicon.entries.items()):
        if all("一" <= ch <= "鿿" for ch in w):
            for c in cats:
                words[c - 1].append(w)
    return words


def _nickname(rng, length):
    return "".join(rng.choice(list(NICK_CHARS), size=length))


def _post_text(rng, words, habits, repost):
    if repost and rng.random() < 0.2:
        return "", 0, 0, 0
    parts = list(words)
    if rng.random() < habits["emoticon"]:
        parts.insert(int(rng.integers(0, len(parts) + 1)), EMOTICONS[int(rng.integers(len(EMOTICONS)))])
    prefix = suffix = ""
    mentions = urls = tags = 0
    if rng.random() < habits["mention"]:
        mentions = 1
        prefix = f"@用户{int(rng.integers(1000, 9999))} "
    if rng.random() < habits["hashtag"]:
        tags = 1
        prefix = TOPICS[int(rng.integers(len(TOPICS)))] + prefix
    if rng.random() < habits["link"]:
        urls = 1
        suffix = f" http://t.cn/{int(rng.integers(10**6, 10**7))}"
    return prefix + "".join(parts) + suffix, mentions, urls, tags


def _user(rng, idx, config, cat_words, survey_time):
    cfg = config
    if cfg.paper_marginals:
        gender = "female" if rng.random() < REFERENCE_FEMALE_SHARE else "male"
        place = LIVING_PLACES[int(rng.choice(3, p=REFERENCE_PLACE_SHARES))]
    else:
        gender = GENDERS[int(rng.integers(2))]
        place = LIVING_PLACES[int(rng.integers(3))]
    age = int(min(65, 18 + rng.gamma(2.0, 4.5)))
    followees = int(rng.lognormal(5.2, 0.6))
    followers = int(rng.lognormal(5.5, 0.8))
    bi = int(rng.binomial(followees, rng.beta(2, 3)))
    statuses = int(rng.lognormal(6.8, 0.5))
    if cfg.active_only:
        statuses = 501 + statuses
    created = survey_time - int(rng.uniform(200, 1200) * DAY)

    habits = {
        "repost": rng.beta(2, 3), "night": rng.beta(1.5, 8),
        "mention": rng.beta(1.5, 5), "link": rng.beta(1, 6), "hashtag": rng.beta(1, 6),
        "emoticon": rng.beta(2, 4), "lexical": rng.beta(10 * cfg.lexical_share + 1, 10 * (1 - cfg.lexical_share) + 1),
        "comments": rng.lognormal(0.5, 0.8), "reposts": rng.lognormal(0.0, 0.9),
        "length": cfg.words_per_post * rng.lognormal(0.0, 0.3),
    }
    activity = rng.lognormal(0.0, 0.4)
    n_posts = int(rng.poisson(cfg.posts_mean * activity))
    mix = rng.dirichlet(np.full(len(cat_words), 1.5))
    usable = np.array([len(w) > 0 for w in cat_words], dtype=float)
    mix = mix * usable
    mix = mix / mix.sum() if mix.sum() > 0 else usable / max(usable.sum(), 1)

    span = cfg.post_span_days * DAY
    times = np.sort(rng.uniform(survey_time - span, survey_time + span, size=n_posts).astype(np.int64))
    # one older post so the survey never precedes the first post
    times = np.concatenate([[survey_time - int(span) - int(rng.integers(1, 30) * DAY)], times])
    times = np.maximum(times, created)
    posts = []
    for ts in times.tolist():
        ts = int(ts)
        hour = (ts // 3600) % 24
        if rng.random() < habits["night"]:
            ts = ts - hour * 3600 + int(rng.integers(0, 6)) * 3600      # move into 00:00-06:00
        repost = bool(rng.random() < habits["repost"])
        n_words = int(1 + rng.poisson(habits["length"]))
        lex = rng.random(n_words) < habits["lexical"]
        words = []
        cats = rng.choice(len(cat_words), size=n_words, p=mix) if mix.sum() > 0 else np.zeros(n_words, int)
        for k in range(n_words):
            pool = cat_words[cats[k]] if lex[k] and cat_words[cats[k]] else FILLER
            words.append(pool[int(rng.integers(len(pool)))])
        text, mentions, urls, tags = _post_text(rng, words, habits, repost)
        posts.append(Post(
            timestamp=max(ts, created), text=text, is_repost=repost,
            mentions_count=mentions, urls_count=urls, hashtags_count=tags,
            comments_received=int(rng.poisson(habits["comments"])),
            reposts_received=int(rng.poisson(habits["reposts"])),
        ))
    posts.sort(key=lambda p: p.timestamp)

    profile = Profile(
        user_id=f"u{idx:05d}",
        gender=gender,
        age=age,
        living_place=place,
        nickname=_nickname(rng, int(rng.integers(2, 13))),
        description="".join(rng.choice(list(FILLER), size=int(rng.integers(0, 12)))),
        followers_count=followers,
        followees_count=followees,
        bi_followers_count=bi,
        statuses_count=statuses,
        favourites_count=int(rng.lognormal(3.0, 1.0)),
        geo_enabled=bool(rng.random() < 0.3),
        allow_all_comment=bool(rng.random() < 0.8),
        allow_all_act_msg=bool(rng.random() < 0.6),
        account_created_at=created,
    )
    return profile, tuple(posts)


def planted_scores(matrix_values, columns, config: GeneratorConfig, rng) -> np.ndarray:
    """Real-valued planted label scores (n x 8) before rounding and clamping."""
    X = np.asarray(matrix_values, dtype=float)
    n = X.shape[0]
    mu = X.mean(axis=0) if n else np.zeros(X.shape[1])
    sd = X.std(axis=0) if n else np.ones(X.shape[1])
    Z = np.where(sd > 0, (X - mu) / np.where(sd > 0, sd, 1.0), 0.0)
    index = {c: j for j, c in enumerate(columns)}
    scores = np.full((n, len(DIMENSIONS)), float(config.label_center))
    for k, d in enumerate(DIMENSIONS):
        for feat, w in config.weights.get(d, {}).items():
            if feat not in index:
                raise GeneratorError(f"weight on unknown feature {feat!r} for {d}")
            scores[:, k] += w * Z[:, index[feat]]
    return scores + config.noise_sd * _exact_noise(rng, Z, len(DIMENSIONS))


def _exact_noise(rng, Z, k) -> np.ndarray:
    # residualize gaussian draws on [1, Z] and rescale to unit sd, so the noise is
    # uncorrelated with every feature in-sample and noise_sd fixes the SNR exactly
    n = Z.shape[0]
    E = rng.standard_normal((n, k))
    if n < Z.shape[1] + 3:
        return E
    A = np.column_stack([np.ones(n), Z])
    coef, *_ = np.linalg.lstsq(A, E, rcond=None)
    E = E - A @ coef
    return E / E.std(axis=0)


def generate_corpus(config: GeneratorConfig = GeneratorConfig(), seed: int = 0) -> Dataset:
    config.validate()
    lexicon = _lexicon_for(config)
    cat_words = _category_words(lexicon)
    rng = make_rng(seed, 0)
    users = []
    for i in range(config.n_users):
        survey = SURVEY_EPOCH + int(rng.uniform(0, config.survey_days * DAY))
        profile, posts = _user(rng, i, config, cat_words, survey)
        users.append((profile, posts, survey))

    placeholder = SwbLabels(*([config.label_ranges[d][0] for d in DIMENSIONS]))
    draft = make_dataset([UserRecord(p, posts, s, placeholder) for p, posts, s in users], config.label_ranges)
    if not users:
        return draft
    matrix = build_matrix(draft, FAMILIES, WindowSpec(), lexicon)
    scores = planted_scores(matrix.values, matrix.columns, config, make_rng(seed, 1))
    records = []
    for (profile, posts, survey), row in zip(users, scores):
        vals = {}
        for k, d in enumerate(DIMENSIONS):
            lo, hi = config.label_ranges[d]
            vals[d] = int(min(hi, max(lo, int(np.rint(row[k])))))
        records.append(UserRecord(profile, posts, survey, SwbLabels(**vals)))
    return make_dataset(records, config.label_ranges)
