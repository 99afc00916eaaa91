"""Command-line entry point ``iotrace``.

Exit codes: 0 success, 1 completed with rejects or flags, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import IOTraceError, ProgramError
from .model import Registry

EXIT_OK = 0
EXIT_FLAGGED = 1
EXIT_ERROR = 2


class _Fail(Exception):
    pass


def _fail(message: str):
    raise _Fail(message)


def _out(args):
    return open(args.output, "w", encoding="utf-8") if getattr(args, "output", None) else sys.stdout


# trace-read


def cmd_trace_read(args) -> int:
    from .printer import format_trace
    from .tracefile import read_trace

    trace = read_trace(args.trace)
    if args.plugin == "print":
        out = _out(args)
        for line in format_trace(trace.activities, trace.registry, args.id_form, trace.epoch_ns):
            out.write(line + "\n")
        if out is not sys.stdout:
            out.close()
        return EXIT_OK
    from .plot import plot_series, write_plot

    prefix = os.path.splitext(os.path.basename(args.trace))[0] or "access"
    for path in write_plot(plot_series(trace.activities, trace.registry), args.out_dir, prefix):
        print(path)
    return EXIT_OK


# translate


def _load_mapping(path):
    from .lang.strace import posix_mapping
    from .lang.translate import TargetMapping

    if path is None:
        return posix_mapping()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    data["ops"] = tuple(data.get("ops", ()))
    data["attrs"] = {k: tuple(v) for k, v in data.get("attrs", {}).items()}
    try:
        return TargetMapping(**data)
    except TypeError as exc:
        _fail(f"bad mapping {path}: {exc}")


def cmd_translate(args) -> int:
    from .lang.sexpr import parse_program
    from .lang.sources import SourceFormat, open_source
    from .lang.strace import STRACE_FORMAT, strace_program
    from .lang.translate import translate
    from .tracefile import write_trace

    try:
        fmt = SourceFormat(args.format, args.delimiter, not args.no_header, tuple(args.columns or ()))
    except ValueError as exc:
        _fail(str(exc))
    if fmt.kind == "strace-text":
        fmt = STRACE_FORMAT
    if args.program:
        with open(args.program, encoding="utf-8") as fh:
            text = fh.read()
        try:
            program = parse_program(text)
        except ProgramError as exc:
            _fail(f"{args.program}: {exc}")
    elif fmt.kind == "strace-text":
        program = strace_program()
    else:
        _fail("--program is required for csv and jsonl input")
    mapping = _load_mapping(args.mapping)
    registry = Registry()
    rejects: list = []
    activities = list(translate(open_source(args.input, fmt), program, mapping, registry, rejects))
    write_trace(args.output, activities, registry)
    rejects_path = args.rejects or args.output + ".rejects"
    with open(rejects_path, "w", encoding="utf-8") as fh:
        for r in rejects:
            fh.write(str(r) + "\n")
    print(f"{len(activities)} activities, {len(rejects)} rejects", file=sys.stderr)
    return EXIT_FLAGGED if rejects and not args.allow_rejects else EXIT_OK


# run


def cmd_run(args) -> int:
    from .pipeline import PipelineConfig, load_pipeline, replay
    from .reporting import aggregate, collect_reports, render
    from .tracefile import read_trace

    config = PipelineConfig.load(args.config)
    trace = read_trace(args.trace)
    pipeline = load_pipeline(config, trace.registry, args.first_instance)
    counters = replay(pipeline, trace.activities)
    out = _out(args)
    out.write(render(aggregate(collect_reports(pipeline))))
    if out is not sys.stdout:
        out.close()
    print(f"published={counters.published} delivered={counters.delivered} "
          f"dropped={counters.dropped} queued={counters.queued} "
          f"listener_errors={sum(counters.errors.values())}", file=sys.stderr)
    return EXIT_OK


# simulate


def _load_json(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except ValueError as exc:
        _fail(f"invalid {what} {path}: {exc}")


def _workloads(spec: dict):
    """(label, per-process traces) pairs described by a simulation spec."""
    from .optimize.workload import PATTERNS, WorkloadSpec, gen_strided, gen_workload

    if "strided" in spec:
        s = dict(spec["strided"])
        yield f"strided-{s['stride']}", {0: gen_strided(**s)}
        return
    w = dict(spec.get("workload") or _fail("spec needs a 'workload' or 'strided' section"))
    patterns = PATTERNS if w.get("pattern") == "all" else (w.get("pattern", "ind-ctg"),)
    for pattern in patterns:
        w["pattern"] = pattern
        yield pattern, gen_workload(WorkloadSpec(**w))


def _effects(spec):
    return {(e["hint"], str(e["value"])): float(e["multiplier"]) for e in spec.get("effects", [])}


def _fmt(x: float) -> str:
    return f"{x:.1f}"


def cmd_simulate(args) -> int:
    from .optimize.hints import HintKey, HintSet, HistoryStore
    from .optimize.storage import StorageModel, default_model, simulate_workload

    spec = _load_json(args.spec, "spec")
    if not isinstance(spec, dict):
        _fail("spec must be a JSON object")
    model = StorageModel.load(args.model) if args.model else default_model()
    threshold = int(spec.get("advisor_threshold", 4)) if args.advisor else None
    effects = _effects(spec)
    hint_sets = [HintSet(h) for h in spec.get("hint_sets", [])]
    out = _out(args)
    out.write("run\tpattern\tadvisor\thints\taccesses\tbytes\ttotal_ns\tmean_ns\tsteady_ns\n")

    def row(run, label, result, hints):
        n = sum(len(s.times) for s in result.streams.values())
        mean = sum(s.total for s in result.streams.values()) / n if n else 0.0
        steady = [s.steady_state_mean() for s in result.streams.values() if s.times]
        steady_mean = sum(steady) / len(steady) if steady else 0.0
        hint_text = json.dumps(hints.as_dict(), sort_keys=True, separators=(",", ":")) if hints else "{}"
        out.write(f"{run}\t{label}\t{'on' if threshold else 'off'}\t{hint_text}\t{n}\t{result.bytes}\t"
                  f"{_fmt(result.total_ns)}\t{_fmt(mean)}\t{_fmt(steady_mean)}\n")

    per_access = []
    for label, traces in _workloads(spec):
        if args.optimize:
            if not hint_sets:
                _fail("--optimize needs 'hint_sets' in the spec")
            key = HintKey(**spec.get("key", {"op_class": "io"}))
            store = HistoryStore()
            runs = int(spec.get("learning_runs", 3))
            for hints in hint_sets:
                for _ in range(runs):
                    result = simulate_workload(traces, model, threshold, hints, effects)
                    store.observe(key, hints, result.bytes, result.total_ns)
                    row("learn", label, result, hints)
            best = store.best(key, runs)
            result = simulate_workload(traces, model, threshold, best, effects)
            row("apply", label, result, best)
        else:
            result = simulate_workload(traces, model, threshold)
            row("run", label, result, None)
        if args.per_access:
            per_access += [(label, pid, i, acc, t, hit)
                           for pid, s in result.streams.items()
                           for i, (acc, t, hit) in enumerate(zip(traces[pid], s.times, s.hits))]
    if args.per_access:
        out.write("\npattern\tpid\tindex\toffset\tlength\ttime_ns\thit\n")
        for label, pid, i, acc, t, hit in per_access:
            out.write(f"{label}\t{pid}\t{i}\t{acc.offset}\t{acc.length}\t{_fmt(t)}\t{int(hit)}\n")
    if out is not sys.stdout:
        out.close()
    return EXIT_OK


# screen


def cmd_screen(args, parser) -> int:
    from .analysis.screening import parse_rule, read_jobstats, read_rules, screen_jobs

    rules = []
    if args.rules:
        rules += read_rules(args.rules)
    rules += [parse_rule(r) for r in args.rule or ()]
    if not rules:
        parser.print_usage(sys.stderr)
        _fail("screen: give --rules FILE or at least one --rule")
    flags = screen_jobs(read_jobstats(args.jobstats), rules)
    out = _out(args)
    if args.human:
        for f in flags:
            out.write(f"job {f.job} exceeds: {'; '.join(f.rules)}\n")
        out.write(f"{len(flags)} job(s) flagged\n")
    else:
        out.write("job\trules\n")
        for f in flags:
            out.write(f"{f.job}\t{'; '.join(f.rules)}\n")
    if out is not sys.stdout:
        out.close()
    return EXIT_FLAGGED if flags else EXIT_OK


# analyze


def cmd_analyze(args, parser) -> int:
    from .analysis.phases import phases_by_stream
    from .analysis.survey import SurveyTable, survey_report
    from .model import Activity
    from .reporting import render
    from .tracefile import read_trace

    if not (args.survey or args.phases):
        parser.print_usage(sys.stderr)
        _fail("analyze: give --survey and/or --phases")
    trace = read_trace(args.trace)
    table = SurveyTable(trace.registry, short_seek_threshold=args.short_seek, keep_accesses=args.phases)
    for a in sorted(trace.activities, key=Activity.sort_key):
        table.update(a)
    out = _out(args)
    if args.survey:
        out.write(render(survey_report(table)))
    if args.phases:
        if args.survey:
            out.write("\n")
        out.write("pid\tfile\tfirst\tlast\taccesses\tclass\tdirection\tbytes\n")
        for (pid, name), phases in phases_by_stream(table.accesses).items():
            for ph in phases:
                out.write(f"{pid}\t{name}\t{ph.start}\t{ph.end}\t{ph.length}\t"
                          f"{ph.access_class.label}\t{ph.direction}\t{ph.weight}\n")
    if out is not sys.stdout:
        out.close()
    return EXIT_OK


# report


def cmd_report(args) -> int:
    from .reporting import aggregate, parse_rendered, render

    reports = []
    for path in args.reports:
        with open(path, encoding="utf-8") as fh:
            try:
                reports += parse_rendered(fh.read())
            except ValueError as exc:
                _fail(f"{path}: {exc}")
    out = _out(args)
    out.write(render(aggregate(reports)))
    if out is not sys.stdout:
        out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iotrace", description="Activity tracing, analysis and I/O simulation.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("trace-read", help="print or plot a trace file")
    s.add_argument("trace")
    s.add_argument("--plugin", choices=("print", "plot"), default="print")
    s.add_argument("--id-form", choices=("auto", "short", "full"), default="auto")
    s.add_argument("--out-dir", default=".", help="directory for plot output")
    s.add_argument("-o", "--output")

    s = sub.add_parser("translate", help="translate a foreign trace into a trace file")
    s.add_argument("input")
    s.add_argument("--format", required=True, choices=("csv", "jsonl", "json-lines", "strace", "strace-text"))
    s.add_argument("--program", help="s-expression program (defaults to the bundled strace adapter)")
    s.add_argument("--mapping", help="JSON target mapping (defaults to POSIX)")
    s.add_argument("--delimiter", default=",")
    s.add_argument("--no-header", action="store_true")
    s.add_argument("--columns", nargs="*")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--rejects", help="reject list path (default: <output>.rejects)")
    s.add_argument("--allow-rejects", action="store_true", help="exit 0 even when records were rejected")

    s = sub.add_parser("run", help="replay a trace through a configured pipeline")
    s.add_argument("trace")
    s.add_argument("--config", help="pipeline configuration (default: $IOTRACE_CONFIG)")
    s.add_argument("--first-instance", type=int, default=0)
    s.add_argument("-o", "--output")

    s = sub.add_parser("simulate", help="simulate a workload against the storage model")
    s.add_argument("--spec", required=True)
    s.add_argument("--model", help="storage model JSON (default: shipped calibration)")
    s.add_argument("--advisor", action="store_true")
    s.add_argument("--optimize", action="store_true")
    s.add_argument("--per-access", action="store_true")
    s.add_argument("-o", "--output")

    s = sub.add_parser("screen", help="screen jobstats rows against high-water-mark rules")
    s.add_argument("jobstats")
    s.add_argument("--rules")
    s.add_argument("--rule", action="append")
    s.add_argument("--human", action="store_true")
    s.add_argument("-o", "--output")

    s = sub.add_parser("analyze", help="survey and phase analysis of a trace")
    s.add_argument("trace")
    s.add_argument("--survey", action="store_true")
    s.add_argument("--phases", action="store_true")
    s.add_argument("--short-seek", type=int, default=1024 * 1024)
    s.add_argument("-o", "--output")

    s = sub.add_parser("report", help="aggregate rendered reports of several processes")
    s.add_argument("reports", nargs="+")
    s.add_argument("-o", "--output")
    for sp in sub.choices.values():
        sp.set_defaults(subparser=sp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subparser
    handlers = {
        "trace-read": lambda: cmd_trace_read(args),
        "translate": lambda: cmd_translate(args),
        "run": lambda: cmd_run(args),
        "simulate": lambda: cmd_simulate(args),
        "screen": lambda: cmd_screen(args, sub),
        "analyze": lambda: cmd_analyze(args, sub),
        "report": lambda: cmd_report(args),
    }
    try:
        return handlers[args.command]()
    except _Fail as exc:
        print(f"iotrace: {exc}", file=sys.stderr)
    except (IOTraceError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"iotrace {args.command}: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
