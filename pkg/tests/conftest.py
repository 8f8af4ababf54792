import pytest

from swbsense.corpus import DIMENSIONS, Post, Profile, SwbLabels, UserRecord, make_dataset
from swbsense.lexicon import load_demo_lexicon

T0 = 1349049600          # 2012-10-01 00:00 UTC, a Monday
DAY = 86400


def profile(uid="u1", **kw):
    base = dict(user_id=uid, gender="female", age=25, living_place="first_tier", nickname="nick",
                description="hello", followers_count=100, followees_count=50, bi_followers_count=20,
                statuses_count=800, favourites_count=10, geo_enabled=False, allow_all_comment=True,
                allow_all_act_msg=False, account_created_at=T0 - 400 * DAY)
    base.update(kw)
    return Profile(**base)


def labels(value=30, **kw):
    vals = {d: value for d in DIMENSIONS}
    vals.update(kw)
    return SwbLabels(**vals)


def record(uid="u1", posts=(), survey_time=T0 + 10 * DAY, lab=None, **profile_kw):
    return UserRecord(profile(uid, **profile_kw), tuple(posts), survey_time, lab or labels())


def post(day, text="今天很开心", hour=12, **kw):
    return Post(timestamp=int(T0 + day * DAY + hour * 3600), text=text, **kw)


def dataset(records):
    return make_dataset(records)


@pytest.fixture(scope="session")
def demo_lexicon():
    return load_demo_lexicon()


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE = []


def criterion(number, title, ok, detail):
    """Record and print one acceptance line; the caller still asserts."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
