"""One test per acceptance criterion; each prints a PASS/FAIL line with its measurements."""

import math
import random
import re
import threading
import time
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest

from conftest import Posix
from iotrace.analysis.histogram import RuntimeHistogram, SpeedCategory
from iotrace.analysis.screening import FIELDS, JobStatsRow, parse_rule, screen_jobs
from iotrace.analysis.survey import AccessClass, SurveyTable, survey_report
from iotrace.errors import FormatError
from iotrace.lang.sexpr import parse_program
from iotrace.lang.sources import SourceFormat, open_source
from iotrace.lang.strace import ingest_strace
from iotrace.lang.translate import TargetMapping, translate
from iotrace.model import ActivityBuilder, Aid, Registry, register_posix
from iotrace.optimize import (
    HintKey,
    HintSet,
    HistoryStore,
    StreamTracker,
    WorkloadSpec,
    apply_data_sieving,
    default_model,
    gen_strided,
    gen_workload,
    simulate,
    simulate_workload,
    workload_activities,
)
from iotrace.pipeline import MemorySink, Multiplexer, RingBufferForwarder
from iotrace.printer import format_trace, parse_line
from iotrace.reporting import Report, aggregate, render
from iotrace.statistics import LEVEL_PERIODS_NS, LEVELS, MultiResolutionHistory, Semantics
from iotrace.tracefile import parse_trace, write_trace

KiB = 1024
MiB = 1024 * KiB
GiB = 1024 * MiB


# 1. read-ahead table


def test_criterion_01_readahead_table(verdict):
    start = time.perf_counter()
    model = default_model()
    stream = 64 * MiB
    rows = {}
    for stride in (20 * KiB, 1000 * KiB):
        trace = gen_strided(stride, KiB, total_bytes=stream)
        off = simulate(trace, model)
        on = simulate(trace, model, StreamTracker(4))
        rows[stride] = (off.mean, on.steady_state_mean())
    elapsed = time.perf_counter() - start

    short_off, short_on = rows[20 * KiB]
    long_off, long_on = rows[1000 * KiB]
    checks = {
        "20K no-advisor": abs(short_off - 97_100) <= 0.2 * 97_100,
        "1000K no-advisor": abs(long_off - 7_855_700) <= 0.2 * 7_855_700,
        "1000K advisor in [30,150]us": 30_000 <= long_on <= 150_000,
        "20K reduction >= 35%": 1 - short_on / short_off >= 0.35,
        "1000K reduction >= 95%": 1 - long_on / long_off >= 0.95,
        "runtime < 5s": elapsed < 5,
    }
    detail = (f"20K {short_off / 1e3:.1f}->{short_on / 1e3:.1f}us, "
              f"1000K {long_off / 1e3:.1f}->{long_on / 1e3:.1f}us, {elapsed:.2f}s")
    failed = [k for k, ok in checks.items() if not ok]
    assert verdict(1, not failed, detail + (f" failed: {failed}" if failed else ""))


# 2. advice trigger point


def _counter_oracle(offsets, length, threshold):
    """Hand simulation: (index, advised offset) of every advice."""
    out, count, stride, last = [], 0, None, None
    for i, off in enumerate(offsets):
        if last is not None:
            if stride is not None and off == last + stride:
                count += 1
            else:
                count, stride = 0, off - last
        last = off
        if count >= threshold and stride > 0:
            out.append((i, off + stride))
    return out


def test_criterion_02_advice_trigger(verdict):
    offsets = [i * 20 * KiB for i in range(12)]
    tracker = StreamTracker(threshold=4)
    got = [(i, a.offset) for i, o in enumerate(offsets) if (a := tracker.observe(o, KiB)) is not None]
    oracle = _counter_oracle(offsets, KiB, 4)
    first_access, first_offset = got[0][0] + 1, got[0][1]
    ok = got == oracle and first_access == 6 and first_offset == 122_880
    assert verdict(2, ok, f"first advice with access {first_access}, offset {first_offset}")


# 3. multi-resolution statistics


def _brute_force_levels(values, semantics):
    series = [list(values)]
    for _ in range(LEVELS - 1):
        prev = series[-1]
        nxt = []
        for i in range(0, len(prev) - len(prev) % 10, 10):
            total = math.fsum(prev[i : i + 10])
            nxt.append(total if semantics is Semantics.COUNTER_DELTA else total / 10)
        series.append(nxt)
    return series


def _oldest(history, name):
    return min(s.t for level in range(LEVELS) for s in history.query(name, level))


def test_criterion_03_multiresolution(verdict):
    rng = random.Random(3)
    h = MultiResolutionHistory()
    metrics = {f"m{i}": rng.choice(list(Semantics)) for i in range(4)}
    for name, sem in metrics.items():
        h.register(name, sem)
    streams = {name: [] for name in metrics}
    cadence = LEVEL_PERIODS_NS[0]
    for k in range(10_000):
        name = rng.choice(list(metrics))
        value = rng.choice([rng.uniform(-1e6, 1e6), float(rng.randrange(-1000, 1000))])
        h.record(name, value, len(streams[name]) * cadence)
        streams[name].append(value)

    exact = all(
        [s.value for s in h.query(name, level)] == series[::-1][:10]
        for name, values in streams.items()
        for level, series in enumerate(_brute_force_levels(values, metrics[name]))
    )
    stored = max(h.stored(name) for name in metrics)
    bound = 100 * 60 * 10**9 + LEVEL_PERIODS_NS[-1]
    horizon = max((len(v) - 1) * cadence - _oldest(h, name) for name, v in streams.items())
    ok = exact and stored <= 50 and horizon <= bound
    assert verdict(3, ok, f"exact={exact} stored<={stored} horizon={horizon / 60e9:.1f}min")


@pytest.mark.xfail(strict=True, reason="an exact x10 cascade fed at 100 ms spans 10^4 s per level-4 sample")
def test_criterion_03_steady_state_horizon(verdict):
    # run long enough that level 4 is full; the x10 cascade then reaches
    # back 10 level-4 samples of 10^4 base samples each, plus the open window
    h = MultiResolutionHistory()
    h.register("m")
    cadence = LEVEL_PERIODS_NS[0]
    n = 120_000
    for k in range(n):
        h.record("m", 1.0, k * cadence)
    horizon = (n - 1) * cadence - _oldest(h, "m")
    bound = 100 * 60 * 10**9 + LEVEL_PERIODS_NS[-1]
    assert verdict("3 (steady-state horizon)", horizon <= bound,
                   f"horizon={horizon / 60e9:.1f}min bound={bound / 60e9:.0f}min")


# 4. histogram categorization


def _oracle_percentile(s, p):
    rank = Fraction(p * (len(s) - 1), 100)
    lo = math.floor(rank)
    if lo + 1 >= len(s):
        return Fraction(s[-1])
    return s[lo] + (s[lo + 1] - s[lo]) * (rank - lo)


def _oracle_category(d, bounds):
    p5, p25, p75, p95 = bounds
    if d < p5:
        return SpeedCategory.VERY_FAST
    if d < p25:
        return SpeedCategory.FAST
    if d <= p75:
        return SpeedCategory.NORMAL
    if d <= p95:
        return SpeedCategory.SLOW
    return SpeedCategory.VERY_SLOW


def test_criterion_04_histogram(verdict):
    rng = random.Random(4)
    mismatches = numpy_gaps = scale_breaks = probes_total = 0
    for _ in range(1000):
        n = rng.randint(20, 300)
        kind = rng.randrange(3)
        if kind == 0:
            durations = [rng.randint(1, 10**9) for _ in range(n)]
        elif kind == 1:
            durations = [max(1, int(rng.lognormvariate(12, 2))) for _ in range(n)]
        else:
            durations = [rng.randint(1, 10) for _ in range(n)]
        hist = RuntimeHistogram(capacity=1000)
        for d in durations:
            hist.learn("read", d)
        s = sorted(durations)
        bounds = [_oracle_percentile(s, p) for p in (5, 25, 75, 95)]
        numpy_bounds = np.percentile(s, [5, 25, 75, 95])
        numpy_gaps += sum(not math.isclose(float(b), nb, rel_tol=1e-9) for b, nb in zip(bounds, numpy_bounds))

        probes = [rng.randint(0, 2 * s[-1]) for _ in range(10)] + rng.sample(s, 5)
        probes += [math.floor(b) for b in bounds] + [math.ceil(b) for b in bounds]
        c = rng.randint(2, 1000)
        scaled = RuntimeHistogram(capacity=1000)
        for d in durations:
            scaled.learn("read", d * c)
        for probe in probes:
            probes_total += 1
            got = hist.categorize("read", probe)
            mismatches += got != _oracle_category(probe, bounds)
            scale_breaks += scaled.categorize("read", probe * c) != got
    ok = mismatches == 0 and numpy_gaps == 0 and scale_breaks == 0
    assert verdict(4, ok, f"{probes_total} probes over 1000 sets: mismatches={mismatches} "
                          f"numpy_gaps={numpy_gaps} scale_breaks={scale_breaks}")


# 5. pipeline conservation


def test_criterion_05_conservation(verdict):
    posix = Posix()
    rng = random.Random(5)
    pool = [posix.op("read", i, i + 1, filehandle=3, bytes_read=1) for i in range(3000)]
    violations = order_errors = 0
    checkpoints = 0
    for trial in range(50):
        mux = Multiplexer(capacity=rng.randint(1, 40))
        sync_seen, async_seen, published = [], [], []
        mux.add_listener(sync_seen.append)
        mux.add_listener(async_seen.append, asynchronous=True)
        accepted = []
        it = iter(pool)
        for _ in range(rng.randint(5, 60)):
            if rng.random() < 0.6:
                for _ in range(rng.randint(1, 30)):
                    a = next(it)
                    queued_before = mux.queued
                    mux.publish(a)
                    published.append(a)
                    if mux.queued > queued_before:
                        accepted.append(a)
            else:
                mux.drain(rng.choice([None, rng.randint(1, 20)]))
            checkpoints += 1
            violations += mux.published != mux.delivered + mux.dropped + mux.queued
        mux.drain()
        order_errors += sync_seen != published or async_seen != accepted

    # concurrent producers and a consumer, checked once everything is quiescent
    mux = Multiplexer(capacity=64)
    counted = []
    mux.add_listener(lambda a: counted.append(1))
    mux.add_listener(lambda a: None, asynchronous=True)
    stop = threading.Event()

    def consume():
        while not stop.is_set():
            mux.drain(8)

    producers = [threading.Thread(target=lambda k=k: [mux.publish(a) for a in pool[k::4]]) for k in range(4)]
    consumer = threading.Thread(target=consume)
    consumer.start()
    for t in producers:
        t.start()
    for t in producers:
        t.join()
    stop.set()
    consumer.join()
    checkpoints += 1
    violations += mux.published != mux.delivered + mux.dropped + mux.queued
    mux.drain()
    violations += mux.queued != 0 or mux.published != mux.delivered + mux.dropped
    order_errors += len(counted) != len(pool)

    # ring flush returns the min(N, new) most recent activities in order
    flush_errors = 0
    for trial in range(200):
        n = rng.randint(1, 50)
        fw = RingBufferForwarder(capacity=n, sink=MemorySink())
        pos = 0
        for _ in range(5):
            new = rng.randint(0, 120)
            batch = pool[pos : pos + new]
            for a in batch:
                fw(a)
            pos += new
            flush_errors += fw.on_anomaly(None) != batch[len(batch) - min(n, new):]
    ok = violations == 0 and order_errors == 0 and flush_errors == 0
    assert verdict(5, ok, f"{checkpoints} checkpoints: violations={violations} "
                          f"order_errors={order_errors} flush_errors={flush_errors}")


# 6. trace round trip


def _random_registry():
    reg = Registry()
    comp, _ = register_posix(reg)
    mpi = reg.register_component("MPI Generic", ("MPI_File_open", "MPI_File_write", "MPI_File_close"))
    attrs = [
        (reg.register_attribute("MPI/hint", "cb_nodes", "int64"), "int64"),
        (reg.register_attribute("MPI/quantity", "bytes", "uint64"), "uint64"),
        (reg.register_attribute("MPI/time", "ratio", "float64"), "float64"),
        (reg.register_attribute("MPI/descriptor", "name", "string"), "string"),
    ]
    return reg, [comp, mpi], attrs


def _random_value(rng, datatype):
    if datatype == "int64":
        return rng.randint(-2**63, 2**63 - 1)
    if datatype == "uint64":
        return rng.randint(0, 2**64 - 1)
    if datatype == "float64":
        return rng.choice([rng.uniform(-1e300, 1e300), rng.random(), -0.0, 5e-324])
    alphabet = 'ab "\\\n\t/,=()é€😀\x00'
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))


def _random_activities(rng, n):
    reg, comps, attrs = _random_registry()
    builder = ActivityBuilder(reg)
    acts, t = [], 0
    for _ in range(n):
        t += rng.randint(0, 1000)
        comp = rng.choice(comps)
        chosen = rng.sample(attrs, rng.randint(0, len(attrs)))
        values = [(a, _random_value(rng, dt)) for a, dt in chosen]
        recent = acts[-20:]
        parents = rng.sample(recent, rng.randint(0, min(2, len(recent))))
        acts.append(builder.build(comp.id, rng.randrange(len(comp.ops)), t, t + rng.randint(0, 10**6), values,
                                  parents, rng.choice([0, 0, 0, -1, 5]), rng.randint(0, 7)))
    return reg, acts


def _mutate(rng, data: bytes) -> bytes:
    kind = rng.randrange(6)
    if kind == 0:
        i = rng.randrange(len(data))
        return data[:i] + bytes([(data[i] + rng.randint(1, 255)) % 256]) + data[i + 1 :]
    if kind == 1:
        i = rng.randrange(len(data))
        return data[:i] + data[i + 1 :]
    if kind == 2:
        i = rng.randrange(len(data) + 1)
        return data[:i] + bytes([rng.randrange(256)]) + data[i:]
    if kind == 3:
        return data[: rng.randrange(len(data))]
    lines = data.split(b"\n")[:-1]
    i, j = rng.randrange(1, len(lines)), rng.randrange(1, len(lines))
    if kind == 4:
        lines.insert(j, lines[i])
    else:
        lines[i], lines[j] = lines[j], lines[i]
        if i == j:
            del lines[i]
    return b"\n".join(lines) + b"\n"


def test_criterion_06_trace_round_trip(tmp_path, verdict):
    rng = random.Random(6)
    reg, acts = _random_activities(rng, 10_000)
    path = tmp_path / "big.trace"
    write_trace(path, acts, reg, epoch_ns=123)
    trace = parse_trace(path.read_bytes())
    round_trip = trace.activities == sorted(acts, key=lambda a: a.sort_key()) and trace.epoch_ns == 123

    small_reg, small = _random_activities(rng, 300)
    write_trace(tmp_path / "small.trace", small, small_reg)
    data = (tmp_path / "small.trace").read_bytes()
    original = parse_trace(data).activities
    wrong = rejected = 0
    for _ in range(1000):
        mutated = _mutate(rng, data)
        try:
            parsed = parse_trace(mutated).activities
        except FormatError:
            rejected += 1
        else:
            wrong += parsed != original
    ok = round_trip and wrong == 0
    assert verdict(6, ok, f"10000-activity round trip={round_trip}; 1000 mutations: "
                          f"rejected={rejected} wrong_parses={wrong}")


# 7. translation oracle


def _strace_corpus(rng, n):
    lines, open_fds = [], {}
    t = Decimal("0.000100")
    for _ in range(n):
        t += Decimal(rng.randint(1, 500)) / 10**6
        pid = rng.randint(100, 103)
        fds = open_fds.setdefault(pid, [])
        ts = f"{t:.6f}"
        choice = rng.random()
        if not fds or choice < 0.15:
            name = f"/data/f{rng.randint(0, 9)}"
            if rng.random() < 0.1:
                lines.append(f'{pid} {ts} open("{name}", O_RDONLY) = -1 ENOENT (No such file or directory)')
            else:
                fd = max(fds, default=2) + 1
                fds.append(fd)
                lines.append(f'{pid} {ts} open("{name}", O_RDWR|O_CREAT, 0644) = {fd}')
            continue
        fd = rng.choice(fds)
        size = rng.randint(1, 65536)
        if choice < 0.45:
            ret = rng.choice([size, rng.randint(0, size), -1])
            tail = " EIO (Input/output error)" if ret == -1 else ""
            lines.append(f'{pid} {ts} read({fd}, "abc"..., {size}) = {ret}{tail}')
        elif choice < 0.75:
            lines.append(f'{pid} {ts} write({fd}, "xyz"..., {size}) = {size}')
        elif choice < 0.9:
            pos = rng.randint(0, 10**9)
            lines.append(f"{pid} {ts} lseek({fd}, {pos}, SEEK_SET) = {pos}")
        else:
            fds.remove(fd)
            lines.append(f"{pid} {ts} close({fd}) = 0")
    return lines


_DIRECT = re.compile(r"(\d+) (\d+\.\d+) (\w+)\((.*)\) = (-?\d+)")


def _direct_parse(lines):
    """Independent reading of the corpus: (aid, op, t0, err, attributes, parents)."""
    out, seq, anchors = [], {}, {}
    for line in lines:
        pid, ts, op, args, ret = _DIRECT.match(line).groups()
        pid, ret = int(pid), int(ret)
        args = [a.strip() for a in args.split(",")]
        attrs = {}
        fd = None
        if op == "open":
            attrs["POSIX/descriptor/filename"] = args[0].strip('"')
            if ret != -1:
                fd = ret
        else:
            fd = int(args[0])
        if fd is not None:
            attrs["POSIX/descriptor/filehandle"] = fd
        if op == "write":
            attrs["POSIX/quantity/BytesToWrite"] = int(args[2])
            attrs["POSIX/quantity/BytesWritten"] = ret
        if op == "read":
            attrs["POSIX/quantity/BytesToRead"] = int(args[2])
            if ret != -1:
                attrs["POSIX/quantity/BytesRead"] = ret
        if op == "lseek":
            attrs["POSIX/file/position"] = ret
        seq[pid] = seq.get(pid, 0) + 1
        aid = Aid(pid, seq[pid])
        parents = () if op == "open" else (anchors[(pid, fd)],)
        if op == "open" and fd is not None:
            anchors[(pid, fd)] = aid
        t0 = int(Decimal(ts) * 10**9)
        out.append((aid, op, t0, -1 if ret == -1 else 0, attrs, parents))
    return out


def test_criterion_07_translation(tmp_path, verdict):
    lines = _strace_corpus(random.Random(7), 1000)
    path = tmp_path / "corpus.strace"
    path.write_text("\n".join(lines) + "\n")
    reg = Registry()
    rejects = []
    acts = list(ingest_strace(path, reg, rejects))
    comp = reg.components.lookup("POSIX")
    got = [
        (a.aid, comp.ops[a.ucaid], a.t_start, a.error,
         {reg.ontology.get(k).qualified_name: v for k, v in a.attributes}, a.parents)
        for a in acts
    ]
    expected = _direct_parse(lines)
    equal = got == expected and not rejects

    # laziness: a program touching 2 of 8 fields
    csv_path = tmp_path / "wide.csv"
    rows = [",".join(str(random.Random(i).randint(0, 99)) for _ in range(8)) for i in range(1000)]
    csv_path.write_text(",".join(f"c{i}" for i in range(8)) + "\n" + "\n".join(rows) + "\n")
    cursor = open_source(csv_path, SourceFormat("csv"))
    program = parse_program('(record (field "op" "open") (field "t0" (to-int (get "c2"))) (field "x" (get "c6")))')
    n = len(list(translate(cursor, program, TargetMapping("X", ("open",)))))
    per_record = cursor.parse_count / n
    ok = equal and per_record <= 2
    assert verdict(7, ok, f"{len(acts)} activities equal={equal} rejects={len(rejects)}; "
                          f"fields parsed per record={per_record:g}")


# 8. survey analytics


def _survey_oracle(p, P, N, B, threshold):
    """Class counts of one ind-nc process from its offsets (i*P + p) * B."""
    def cls(gap):
        if gap == 0:
            return AccessClass.SEQUENTIAL
        return AccessClass.RANDOM_SHORT if gap <= threshold else AccessClass.RANDOM_LONG

    counts = {c: 0 for c in AccessClass}
    counts[cls(p * B)] += 1
    if N > 1:
        counts[cls((P - 1) * B)] += N - 1
    return counts


REPORT_FIELDS = [
    "Accesses", "Accesses/Reading/Random, long seek", "Accesses/Reading/Random, short seek",
    "Bytes/Read per access", "Seek Distance/Average writing", "Time/Total for opening",
    "Time/Total for reading", "Time/Total for writing", "Time/Total for closing", "Time/Total surveyed",
]


def test_criterion_08_survey(verdict):
    spec = WorkloadSpec("ind-nc", processes=10, blocks=10240, block_size=100 * KiB)
    reg = Registry()
    acts = workload_activities(gen_workload(spec), reg)
    mismatches = 0
    reports = []
    for threshold in (MiB, 512 * KiB):
        tables = {p: SurveyTable(reg, short_seek_threshold=threshold) for p in range(spec.processes)}
        for a in acts:
            tables[a.aid.pid].update(a)
        for p, table in tables.items():
            (stats,) = table.files.values()
            oracle = _survey_oracle(p, spec.processes, spec.blocks, spec.block_size, threshold)
            mismatches += dict(stats.read.counts) != oracle
            if threshold == MiB:
                reports.append(survey_report(table, instance=15, component="MPI Generic"))

    agg = aggregate(reports)
    text = render(agg)
    names = set(agg[0].groups['"/shared/file.dat"'])
    missing = [f for f in REPORT_FIELDS if f not in names]
    triples = all(re.search(r" = \(-?[\d.e+-]+,-?[\d.e+-]+,-?[\d.e+-]+\)$", line) for line in text.splitlines())
    small = []
    for v in (3, 1, 2):
        r = Report("FileSurveyor", 15, "MPI Generic")
        r.set('"/f"', "Accesses", v)
        small.append(r)
    folded = render(aggregate(small)).endswith("= (2,1,3)\n")
    ok = mismatches == 0 and not missing and triples and folded
    assert verdict(8, ok, f"class-count mismatches={mismatches} over 20 process surveys; "
                          f"missing fields={missing}; triples={triples}; [3,1,2]->(2,1,3) {folded}")


@pytest.mark.xfail(strict=True, reason="P=10, N=10240, B=100 KiB covers 10,000 MiB, not 10 GiB")
def test_criterion_08_total_bytes(verdict):
    total = WorkloadSpec("ind-nc", 10, 10240, 100 * KiB).total_bytes
    assert verdict("8 (10 GiB total)", total == 10 * GiB, f"total={total} bytes, 10 GiB={10 * GiB}")


# 9. data sieving


def _region_oracle(blocks, size):
    start, end = min(b.offset for b in blocks), max(b.end for b in blocks)
    regions = []
    for lo in range(start, end, size):
        hi = min(lo + size, end)
        members = tuple(sorted((b for b in blocks if lo <= b.offset and b.end <= hi), key=lambda b: b.offset))
        assert all(b.end <= lo or b.offset >= hi or b in members for b in blocks)
        if members:
            regions.append((lo, hi - lo, members))
    return regions


def test_criterion_09_data_sieving(verdict):
    size = 500 * KiB
    traces = gen_workload(WorkloadSpec("ind-nc", 2, 20, 100 * KiB, direction="write"))
    details, ok = [], True
    for pid, writes in traces.items():
        cycles = apply_data_sieving(writes, size)
        extent = max(w.end for w in writes) - min(w.offset for w in writes)
        got = [(c.offset, c.length, c.blocks) for c in cycles]
        full = all(c.length == size == c.bytes_read == c.bytes_written for c in cycles[:-1])
        covered = sorted(b for c in cycles for b in c.blocks) == sorted(writes)
        ok &= (got == _region_oracle(writes, size) and full and covered
               and len(cycles) == math.ceil(extent / size))
        details.append(f"p{pid}: {len(cycles)} cycles over {extent // KiB} KiB, tail {cycles[-1].length // KiB} KiB")
    assert verdict(9, ok, "; ".join(details))


# 10. hint learning


def _learn(traces, model, effects, sets, scale=1):
    store = HistoryStore()
    key = HintKey("write")
    for _ in range(3):
        for hints in sets:
            r = simulate_workload(traces, model, hints=hints, effects=effects)
            store.observe(key, hints, r.bytes, r.total_ns / scale)
    return store.best(key)


def test_criterion_10_hint_learning(verdict):
    model = default_model()
    traces = gen_workload(WorkloadSpec("ind-nc", 2, 8, 100 * KiB, direction="write"))
    a, b = HintSet(romio_ds_write="enable"), HintSet(romio_ds_write="disable")
    effects = {("romio_ds_write", "enable"): 1.2, ("romio_ds_write", "disable"): 1.5}
    best = _learn(traces, model, effects, [a, b])
    second = simulate_workload(traces, model, hints=best, effects=effects)
    worse = simulate_workload(traces, model, hints=a, effects=effects)
    flipped = _learn(traces, model, {("romio_ds_write", "enable"): 2.0}, [a, b])

    rng = random.Random(10)
    scales = [10 ** rng.uniform(-6, 6) for _ in range(50)] + [Fraction(1, 3), Fraction(7)]
    invariant = all(_learn(traces, model, effects, [a, b], c) == best for c in scales)
    ok = best == b and second.total_ns < worse.total_ns and flipped == a and invariant
    assert verdict(10, ok, f"picked {dict(best.items())}, second run {second.total_ns / 1e6:.2f}ms "
                           f"vs {worse.total_ns / 1e6:.2f}ms; invariant over {len(scales)} scales={invariant}")


# 11. screening


def _brute_screen(rows, rule_texts):
    ops = {"<": lambda x, y: x < y, ">": lambda x, y: x > y, "<=": lambda x, y: x <= y, ">=": lambda x, y: x >= y}
    flags = []
    for row in rows:
        hits = []
        for text in rule_texts:
            field, op, value = text.split()
            v = getattr(row, field.replace("-", "_"))
            if v is not None and ops[op](v, float(value)):
                hits.append(text)
        if hits:
            flags.append((row.job, tuple(hits)))
    return sorted(flags, key=lambda f: int(f[0]))


def test_criterion_11_screening(verdict):
    rng = random.Random(11)
    rows = []
    for j in range(1000):
        opens = rng.choice([rng.randint(0, 10**7), 5_000_000, 5_000_001, 4_999_999, 0])
        reads, writes = rng.choice([0, rng.randint(0, 10**6)]), rng.choice([0, rng.randint(0, 10**6)])
        rows.append(JobStatsRow(str(rng.randint(0, 10**6) * 1000 + j), opens, reads, writes,
                                rng.randint(0, 10**12), rng.randint(0, 10**12)))
    agree = True
    for _ in range(50):
        rules = [f"{rng.choice(FIELDS).replace('_', '-')} {rng.choice(['<', '>', '<=', '>='])} {rng.randint(0, 10**7)}"
                 for _ in range(rng.randint(1, 4))]
        got = [(f.job, f.rules) for f in screen_jobs(rows, rules)]
        agree &= got == _brute_screen(rows, rules)
    flagged = {f.job for f in screen_jobs(rows, [parse_rule("opens > 5000000")])}
    expected = {r.job for r in rows if r.opens > 5_000_000}
    exact = flagged == expected
    ok = agree and exact
    assert verdict(11, ok, f"50 random rule sets agree={agree}; 5M rule flags {len(flagged)} rows, exact={exact}")


# 12. print format


EXAMPLE = (
    '0.0006299 ID1 POSIX open(POSIX/descriptor/filename="f1",POSIX/descriptor/filehandle=4) = 0\n'
    "0.0007000 ID2 POSIX write(POSIX/descriptor/filehandle=4,POSIX/quantity/BytesToWrite=5,"
    "POSIX/quantity/BytesWritten=5) = 0 ID1\n"
    "0.0008000 ID3 POSIX close(POSIX/descriptor/filehandle=4) = 0 ID1\n"
)


def test_criterion_12_print_format(verdict):
    posix = Posix()
    o = posix.op("open", 629_900, 650_000, filename="f1", filehandle=4)
    w = posix.op("write", 700_000, parents=[o], filehandle=4, bytes_to_write=5, bytes_written=5)
    c = posix.op("close", 800_000, parents=[o], filehandle=4)
    acts = [o, w, c]
    text = "".join(line + "\n" for line in format_trace(acts, posix.registry))
    exact = text.encode() == EXAMPLE.encode()
    inverted = all(
        (p.t_start, p.aid, p.component, p.op, p.error, tuple(p.parents))
        == (a.t_start, a.aid, "POSIX", posix.comp.ops[a.ucaid], a.error, a.parents)
        and dict(p.attributes) == {posix.registry.ontology.get(k).qualified_name: v for k, v in a.attributes}
        for a, p in zip(acts, map(parse_line, EXAMPLE.splitlines()))
    )
    ok = exact and inverted
    assert verdict(12, ok, f"byte-exact={exact} parser inverts={inverted}")
