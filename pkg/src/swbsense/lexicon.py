"""LIWC-style category dictionaries: parsing, segmentation and category counts.

File format (``.dic``)::

    %
    1<TAB>posemo
    2<TAB>negemo
    %
    开心<TAB>1
    happ*<TAB>1
    焦虑<TAB>2<TAB>7

A trailing ``*`` marks a wildcard entry matching any token with that prefix.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

_CJK = "぀-ヿ㐀-䶿一-鿿豈-﫿"
_TOKEN_RE = re.compile(rf"(?P<cjk>[{_CJK}]+)|(?P<word>(?:(?![{_CJK}])[^\W_])+)")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    categories: tuple                 # ((id, name), ...) with ids 1..K
    entries: dict                     # word -> tuple of category ids (exact words)
    wildcards: dict                   # prefix -> tuple of category ids
    _max_len: int = field(default=1, repr=False, compare=False)
    _vocab: frozenset = field(default=frozenset(), repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.categories)

    @property
    def category_names(self) -> list[str]:
        return [name for _, name in self.categories]

    def lookup(self, token: str) -> tuple:
        """Category ids for ``token``; an exact entry beats any wildcard, longer prefixes beat shorter."""
        cats = self.entries.get(token)
        if cats is not None:
            return cats
        for k in range(len(token), 0, -1):
            cats = self.wildcards.get(token[:k])
            if cats is not None:
                return cats
        return ()


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple

    @property
    def total_count(self) -> int:
        return len(self.tokens)

    def __add__(self, other: "TokenStream") -> "TokenStream":
        return TokenStream(self.tokens + other.tokens)


@dataclass(frozen=True)
class CategoryCounts:
    counts: np.ndarray     # length K, index k is category id k + 1
    total_tokens: int

    def __add__(self, other: "CategoryCounts") -> "CategoryCounts":
        return CategoryCounts(self.counts + other.counts, self.total_tokens + other.total_tokens)

    def proportions(self) -> np.ndarray:
        if self.total_tokens == 0:
            return np.zeros(len(self.counts))
        return self.counts / self.total_tokens


def build_lexicon(categories, entries) -> Lexicon:
    """Assemble a :class:`Lexicon` from ``[(id, name)]`` and ``{word: ids}``."""
    categories = tuple((int(i), str(n)) for i, n in categories)
    if not categories:
        raise LexiconError("empty category block")
    ids = [i for i, _ in categories]
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise LexiconError(f"category ids must be dense 1..K, got {sorted(ids)}")
    names = [n for _, n in categories]
    if len(set(names)) != len(names):
        raise LexiconError("duplicate category names")
    categories = tuple(sorted(categories))
    exact, wild = {}, {}
    for word, cats in entries.items():
        word = word.lower()
        cats = tuple(sorted(set(int(c) for c in cats)))
        bad = [c for c in cats if not 1 <= c <= len(categories)]
        if bad:
            raise LexiconError(f"entry {word!r} references undeclared categories {bad}")
        if word.endswith("*"):
            target, key = wild, word[:-1]
        else:
            target, key = exact, word
        if not key:
            raise LexiconError("empty entry word")
        target[key] = tuple(sorted(set(target.get(key, ())) | set(cats)))
    vocab = frozenset(exact) | frozenset(wild)
    max_len = max((len(w) for w in vocab), default=1)
    return Lexicon(categories, exact, wild, max_len, vocab)


def parse_lexicon(path) -> Lexicon:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    i = 0
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i >= len(lines) or lines[i].strip() != "%":
        raise LexiconError(f"{path}: expected '%' opening the category block")
    i += 1
    categories, seen = [], set()
    while i < len(lines) and lines[i].strip() != "%":
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2 or not parts[0].isdigit():
            raise LexiconError(f"{path}:{i}: bad category line {line!r}")
        cid = int(parts[0])
        if cid in seen:
            raise LexiconError(f"{path}:{i}: duplicate category id {cid}")
        seen.add(cid)
        categories.append((cid, parts[1].strip()))
    if i >= len(lines):
        raise LexiconError(f"{path}: category block is not closed by '%'")
    if not categories:
        raise LexiconError(f"{path}: empty category block")
    declared = set(seen)
    entries: dict = {}
    for lineno in range(i + 2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        parts = line.split()
        word, ids = parts[0], parts[1:]
        if not ids:
            raise LexiconError(f"{path}:{lineno}: entry {word!r} has no categories")
        try:
            ids = [int(c) for c in ids]
        except ValueError:
            raise LexiconError(f"{path}:{lineno}: non-integer category id in {line!r}") from None
        unknown = [c for c in ids if c not in declared]
        if unknown:
            raise LexiconError(f"{path}:{lineno}: entry {word!r} references undeclared category {unknown[0]}")
        entries.setdefault(word.lower(), []).extend(ids)
    try:
        return build_lexicon(categories, entries)
    except LexiconError as exc:
        raise LexiconError(f"{path}: {exc}") from None


def demo_lexicon_path() -> Path:
    return Path(str(resources.files("swbsense") / "data" / "demo.dic"))


def load_demo_lexicon() -> Lexicon:
    return parse_lexicon(demo_lexicon_path())


def _max_match(run: str, lexicon: Lexicon) -> list[str]:
    out = []
    i, n = 0, len(run)
    vocab, max_len = lexicon._vocab, lexicon._max_len
    while i < n:
        for k in range(min(max_len, n - i), 0, -1):
            if k == 1 or run[i:i + k] in vocab:
                out.append(run[i:i + k])
                i += k
                break
    return out


def segment(text: str, lexicon: Lexicon) -> TokenStream:
    """Lowercased tokens: whitespace/punctuation split, forward maximum matching inside CJK runs."""
    tokens = []
    for m in _TOKEN_RE.finditer(text.lower()):
        if m.lastgroup == "cjk":
            tokens.extend(_max_match(m.group(), lexicon))
        else:
            tokens.append(m.group())
    return TokenStream(tuple(tokens))


def count_categories(tokens: TokenStream, lexicon: Lexicon) -> CategoryCounts:
    counts = np.zeros(lexicon.size)
    for tok in tokens.tokens:
        for c in lexicon.lookup(tok):
            counts[c - 1] += 1
    return CategoryCounts(counts, tokens.total_count)
