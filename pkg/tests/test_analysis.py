from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotrace.analysis.histogram import RuntimeHistogram, SpeedCategory, category_for, percentile
from iotrace.analysis.phases import detect_phases
from iotrace.analysis.reasoner import HealthReport, Scope, reason
from iotrace.analysis.screening import JobStatsRow, parse_rule, read_jobstats, read_rules, screen_jobs
from iotrace.analysis.survey import AccessClass, SurveyTable, classify_access, survey_report
from iotrace.errors import InsufficientSamples, RuleSyntaxError

MiB = 1024 * 1024

# histogram


def test_percentile_matches_numpy_on_fixed_set():
    data = sorted([7, 1, 3, 9, 4, 4, 12, 30, 2, 5])
    for p in (5, 25, 75, 95):
        assert float(percentile(data, p)) == pytest.approx(np.percentile(data, p), rel=1e-12)
    assert percentile(list(range(1, 21)), 5) == Fraction(195, 100)


def test_boundary_rule():
    bounds = (Fraction(10), Fraction(20), Fraction(30), Fraction(40))
    got = [category_for(d, bounds) for d in (9, 10, 19, 20, 30, 31, 40, 41)]
    assert got == [0, 1, 1, 2, 2, 3, 3, 4]


def test_insufficient_samples():
    h = RuntimeHistogram(min_samples=20)
    for d in range(19):
        h.learn("read", d)
    with pytest.raises(InsufficientSamples):
        h.categorize("read", 5)
    h.learn("read", 19)
    assert h.categorize("read", 100) is SpeedCategory.VERY_SLOW


def test_reservoir_is_bounded_and_seeded():
    a, b = RuntimeHistogram(capacity=50, seed=4), RuntimeHistogram(capacity=50, seed=4)
    for d in range(1000):
        a.learn(0, d)
        b.learn(0, d)
    assert a.learned(0) == 50
    assert a.samples(0) == b.samples(0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 10**9), min_size=20, max_size=200), st.integers(1, 10**9), st.integers(1, 1000))
def test_scale_invariance(samples, probe, c):
    h1, h2 = RuntimeHistogram(), RuntimeHistogram()
    for d in samples:
        h1.learn(0, d)
        h2.learn(0, d * c)
    assert h1.categorize(0, probe) == h2.categorize(0, probe * c)


# reasoner


def test_reasoner_threshold():
    counts = {SpeedCategory.NORMAL: 7, SpeedCategory.SLOW: 2, SpeedCategory.VERY_SLOW: 1}
    report, signal = reason("process", [counts], trigger=0.3, min_activity=10)
    assert not report.healthy and signal.severity == pytest.approx(0.3)
    report, signal = reason("process", [counts], trigger=0.31)
    assert report.healthy and signal is None
    report, signal = reason("process", [counts], min_activity=11)
    assert signal is None


def test_reasoner_merges_neighbors():
    neighbor = HealthReport(Scope.NODE, {SpeedCategory.VERY_SLOW: 10})
    report, signal = reason("node", [{SpeedCategory.NORMAL: 10}], [neighbor])
    assert report.total == 20 and signal.scope is Scope.NODE


# survey


def test_classify_access():
    assert classify_access(100, 100) is AccessClass.SEQUENTIAL
    assert classify_access(100, 100 + MiB) is AccessClass.RANDOM_SHORT
    assert classify_access(100, 101 + MiB) is AccessClass.RANDOM_LONG
    assert classify_access(2 * MiB, 0) is AccessClass.RANDOM_LONG
    assert AccessClass.RANDOM_SHORT.label == "Random, short seek"


def _survey(posix, events, **kw):
    table = SurveyTable(posix.registry, keep_accesses=True, **kw)
    for a in events:
        table.update(a)
    return table


def test_survey_counts(posix):
    o = posix.op("open", 0, 5, filename="/d/f", filehandle=3)
    ev = [o]
    for i, off in enumerate([0, 10, 30, 30 + 2 * MiB]):
        ev.append(posix.op("read", 10 + i, 11 + i, parents=[o], filehandle=3, bytes_read=10, position=off))
    ev.append(posix.op("lseek", 20, 22, parents=[o], filehandle=3, position=0))
    ev.append(posix.op("write", 30, 33, parents=[o], filehandle=3, bytes_written=4))
    ev.append(posix.op("close", 40, 41, parents=[o], filehandle=3))
    t = _survey(posix, ev)
    r = survey_report(t).groups['"/d/f"']
    assert r["Accesses"] == 5
    assert r["Accesses/Reading/Sequential"] == 2
    assert r["Accesses/Reading/Random, short seek"] == 1
    assert r["Accesses/Reading/Random, long seek"] == 1
    assert r["Accesses/Writing/Random, long seek"] == 1
    assert r["Bytes/Total read"] == 40 and r["Bytes/Total written"] == 4
    assert r["Bytes/Read per access"] == 10
    assert r["Time/Total for seeking"] == 2
    assert r["Time/Total for closing"] == 1
    assert r["Time/Total surveyed"] == 5 + 4 + 2 + 3 + 1


def test_survey_unknown_handle_and_overflow(posix):
    ev = [posix.op("read", 0, filehandle=9, bytes_read=1)]
    ev += [posix.op("open", 1 + i, filename=f"f{i}", filehandle=i) for i in range(3)]
    t = _survey(posix, ev, max_files=2)
    assert t.unknown_handles == 1
    # two files tracked individually, the third shares the overflow row
    assert sorted(t.files) == ["ALL_OTHERS", "f0", "f1"]


def test_phases(posix):
    o = posix.op("open", 0, filename="f", filehandle=3)
    ev = [o]
    for i in range(4):
        ev.append(posix.op("write", 1 + i, parents=[o], filehandle=3, bytes_written=10, position=10 * i))
    for i in range(3):
        ev.append(posix.op("read", 10 + i, parents=[o], filehandle=3, bytes_read=10, position=5 * MiB * (i + 1)))
    phases = detect_phases(_survey(posix, ev).accesses)
    assert [(p.direction, p.access_class, p.length, p.weight) for p in phases] == [
        ("write", AccessClass.SEQUENTIAL, 4, 40),
        ("read", AccessClass.RANDOM_LONG, 3, 30),
    ]


# screening


def test_parse_rule():
    r = parse_rule("opens > 5000000")
    assert (r.field, r.op, r.threshold) == ("opens", ">", 5000000)
    assert parse_rule("avg-io-size < 4096").field == "avg_io_size"
    for bad in ("opens >> 5", "nope > 1", "opens > x", ""):
        with pytest.raises(RuleSyntaxError):
            parse_rule(bad)


def test_screen_jobs():
    rows = [JobStatsRow("10", opens=6_000_000), JobStatsRow("9", opens=5_000_000),
            JobStatsRow("2", reads=10, bytes_r=100), JobStatsRow("3")]
    flags = screen_jobs(rows, ["opens > 5000000", "avg-io-size < 4096"])
    assert [(f.job, f.rules) for f in flags] == [("2", ("avg-io-size < 4096",)), ("10", ("opens > 5000000",))]
    with pytest.raises(ValueError):
        screen_jobs(rows, [])


def test_screening_files(tmp_path):
    js = tmp_path / "j.jsonl"
    js.write_text('{"job": 1, "opens": 7}\n\n{"job": "b", "writes": 2, "bytes_w": 8}\n')
    rules = tmp_path / "r.txt"
    rules.write_text("# comment\nopens > 5\n")
    rows = read_jobstats(js)
    assert rows[1].avg_io_size == 4
    assert [f.job for f in screen_jobs(rows, read_rules(rules))] == ["1"]
