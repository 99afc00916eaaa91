from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotrace.errors import BadDuration, BufferTooSmall, ModelError
from iotrace.model import Registry
from iotrace.optimize import (
    HintKey,
    HintSet,
    HistoryStore,
    IOAccess,
    ReadAheadAdvice,
    ReadAheadAdvisor,
    StorageModel,
    StreamTracker,
    WorkloadSpec,
    apply_data_sieving,
    calibrate,
    default_model,
    gen_strided,
    gen_workload,
    hint_multiplier,
    simulate,
    simulate_workload,
    workload_activities,
)

KiB = 1024


# read-ahead


def test_tracker_counter():
    t = StreamTracker(threshold=2)
    assert [t.observe(o, 10) for o in (0, 100, 200)] == [None, None, None]
    assert t.observe(300, 10) == ReadAheadAdvice(400, 10)
    # a miss resets the counter and re-infers the stride
    assert t.observe(1000, 10) is None
    assert t.stride == 700 and t.correct == 0


def test_tracker_needs_forward_stride():
    t = StreamTracker(threshold=1)
    advice = [t.observe(o, 1) for o in (100, 90, 80, 70)]
    assert advice == [None, None, None, None]
    assert t.correct == 2


def test_length_change_is_a_miss():
    t = StreamTracker(threshold=1)
    for o in (0, 10, 20):
        t.observe(o, 10)
    assert t.observe(30, 5) is None and t.correct == 0


def test_advisor_per_handle():
    adv = ReadAheadAdvisor(threshold=1)
    for i in range(3):
        adv.observe("a", i * 10, 10)
        adv.observe("b", i * 50, 10)
    assert adv.advised == 2
    adv.forget("a")
    assert "a" not in adv.trackers


@given(st.integers(1, 10**6), st.integers(1, 10**4), st.integers(1, 8))
def test_advice_points_at_next_access(stride, length, threshold):
    t = StreamTracker(threshold)
    out = [t.observe(i * stride, length) for i in range(threshold + 3)]
    first = next(i for i, a in enumerate(out) if a is not None)
    assert first == threshold + 1
    assert out[first] == ((first + 1) * stride, length)


# storage model


def test_default_model_cells():
    m = default_model()
    short = simulate(gen_strided(20 * KiB, total_bytes=64 * 1024 * KiB), m)
    assert short.mean == pytest.approx(97_100)
    long = simulate(gen_strided(1000 * KiB, total_bytes=64 * 1024 * KiB), m)
    assert long.times[1] == pytest.approx(7_855_700)


def test_calibrate_recovers_parameters():
    m = calibrate(97_100, 7_855_700, 45_100)
    assert m.access_time(20 * KiB - KiB, KiB) == pytest.approx(97_100)
    assert m.access_time(1000 * KiB - KiB, KiB) == pytest.approx(7_855_700)
    with pytest.raises(ModelError):
        calibrate(97_100, 7_855_700, 45_100, near_bytes=10)


def test_model_validation(tmp_path):
    with pytest.raises(ModelError):
        StorageModel(1, 1, 1, 1, 2)
    with pytest.raises(ModelError):
        StorageModel(-1, 1, 1, 1, 0.5)
    with pytest.raises(ModelError):
        StorageModel.from_dict({"c0_ns": 1, "bogus": 2})
    path = tmp_path / "m.json"
    path.write_text(default_model().to_json())
    assert StorageModel.load(path) == default_model()


def test_seek_cost_is_capped():
    m = StorageModel(100, 1, 1000, 1, 10)
    assert m.positioning(5000) == m.positioning(1000) == 1100
    assert m.positioning(-500) == 600


def test_advised_extent_is_consumed():
    m = StorageModel(100, 0.001, 10**6, 1, 10)
    r = simulate(gen_strided(1000, 10, count=8), m, StreamTracker(2))
    assert r.hits == [False] * 4 + [True] * 4
    assert r.steady_state_mean() == 10
    # advice is issued from the 4th access on, one per access
    assert r.advice == 5


def test_hint_multiplier():
    effects = {("ds", "on"): 2.0, ("cb", "4"): 1.5}
    assert hint_multiplier(HintSet(ds="on", cb=4), effects) == 3.0
    assert hint_multiplier(None, effects) == 1.0
    m = StorageModel(100, 0.001, 10**6, 1, 10)
    trace = gen_strided(1000, 10, count=3)
    slow = simulate(trace, m).total
    assert simulate(trace, m, hints=HintSet(ds="on"), effects=effects).total == pytest.approx(slow / 2)


# workloads


def test_gen_workload_offsets():
    ctg = gen_workload(WorkloadSpec("ind-ctg", 2, 3, 10))
    assert [a.offset for a in ctg[1]] == [30, 40, 50]
    nc = gen_workload(WorkloadSpec("coll-nc", 2, 3, 10))
    assert [a.offset for a in nc[1]] == [10, 30, 50]
    assert [a.barrier for a in nc[0]] == [0, 1, 2]
    assert WorkloadSpec("ind-nc", 10, 10240, 100 * KiB).total_bytes == 10_000 * 1024**2


def test_bad_workload_spec():
    with pytest.raises(ValueError):
        WorkloadSpec("ind-xx")
    with pytest.raises(ValueError):
        WorkloadSpec(processes=0)
    with pytest.raises(ValueError):
        gen_strided(10, 20, count=1)


def test_single_access_workload():
    r = simulate_workload(gen_workload(WorkloadSpec("ind-ctg", 1, 1, 100)), default_model())
    assert r.total_ns == r.streams[0].times[0] == r.streams[0].total


def test_collective_rounds_take_slowest_member():
    m = StorageModel(100, 1, 10**6, 1, 10)
    traces = {0: [IOAccess(0, 10, barrier=0), IOAccess(10, 10, barrier=1)],
              1: [IOAccess(5000, 10, barrier=0), IOAccess(5010, 10, barrier=1)]}
    r = simulate_workload(traces, m)
    assert r.total_ns == pytest.approx(max(r.streams[0].times[0], r.streams[1].times[0]) + 110)


def test_workload_activities_are_valid_trace(tmp_path):
    from iotrace.tracefile import read_trace, write_trace

    reg = Registry()
    acts = workload_activities(gen_workload(WorkloadSpec("ind-nc", 2, 3, 10)), reg)
    assert len(acts) == 2 * (3 + 2)
    write_trace(tmp_path / "w.trace", acts, reg)
    assert read_trace(tmp_path / "w.trace").activities == sorted(acts, key=lambda a: a.sort_key())


# data sieving


def test_sieving_regions():
    writes = [IOAccess(o, 10, "write") for o in (0, 20, 40, 60)]
    cycles = apply_data_sieving(writes, 35)
    assert [(c.offset, c.length, len(c.blocks)) for c in cycles] == [(0, 35, 2), (35, 35, 2)]
    # a block that would straddle the boundary ends the region early
    cycles = apply_data_sieving(writes, 25)
    assert [(c.offset, c.length) for c in cycles] == [(0, 20), (20, 20), (40, 20), (60, 10)]
    with pytest.raises(BufferTooSmall):
        apply_data_sieving(writes, 5)
    assert apply_data_sieving([], 10) == []


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 200), min_size=1, max_size=40, unique=True), st.integers(1, 8), st.integers(1, 5))
def test_sieving_covers_each_block_once(slots, block, factor):
    writes = [IOAccess(s * block * 2, block, "write") for s in slots]
    size = block * factor
    cycles = apply_data_sieving(writes, size)
    members = [b for c in cycles for b in c.blocks]
    assert sorted(members) == sorted(writes)
    for c in cycles:
        assert 0 < c.length <= size
        assert all(c.offset <= b.offset and b.end <= c.end for b in c.blocks)
    for a, b in zip(cycles, cycles[1:]):
        assert a.end <= b.offset


# hints


def test_hint_set_is_canonical():
    assert HintSet({"b": 1, "a": "x"}) == HintSet(a="x", b="1")
    assert HintSet(a=1).items() == (("a", "1"),)
    assert HintKey.for_file("write", 7, "/x/out.DAT") == HintKey("write", "7", ".dat")


def test_best_hints():
    store = HistoryStore()
    key = HintKey("write")
    a, b = HintSet(x=1), HintSet(x=2)
    for _ in range(3):
        store.observe(key, a, 100, 10)
    for _ in range(2):
        store.observe(key, b, 100, 5)
    assert store.best(key) == a
    store.observe(key, b, 100, 5)
    assert store.best(key) == b
    assert store.records[key][b].mean == Fraction(20)
    assert store.best(HintKey("read")) is None
    with pytest.raises(BadDuration):
        store.observe(key, a, 1, 0)


def test_best_hints_tie_goes_to_most_recent():
    store = HistoryStore()
    key = HintKey("io")
    for _ in range(3):
        store.observe(key, HintSet(x=1), 10, 1)
        store.observe(key, HintSet(x=2), 10, 1)
    assert store.best(key) == HintSet(x=2)
