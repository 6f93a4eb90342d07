"""Batch front-end: ``muqkd --config run.json``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import ConfigError, RunConfig, load
from .network import route, schedule
from .session import SessionOutcome, SessionSettings, run_session

log = logging.getLogger("muqkd")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _one(args: tuple[SessionSettings, np.random.SeedSequence, int]) -> SessionOutcome:
    settings, seed, index = args
    return run_session(settings, seed, index)


def run_sessions(config: RunConfig) -> list[SessionOutcome]:
    """Execute every session; results are ordered by session index."""
    settings = config.session_settings()
    seeds = np.random.SeedSequence(config.seed).spawn(config.sessions)
    jobs = [(settings, s, i) for i, s in enumerate(seeds)]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_one, jobs))
    else:
        outcomes = [_one(j) for j in jobs]

    topo = config.topology
    plan = schedule(topo.topology, list(topo.requests))
    for out in outcomes:
        k = out.report.index % len(topo.requests)
        sender, receiver = topo.requests[k]
        out.report.slot = plan.slots[k].slot_id
        out.report.route = [
            {"segment": p.segment.value, "path": list(p.path)}
            for p in route(topo.topology, sender, receiver).segments
        ]
    return outcomes


def aggregate(reports: list, thresholds: dict) -> dict:
    pooled = {c: an.ClassStats() for c in an.SampleClass}
    counters = an.Counters()
    for r in reports:
        for c, st in r.stats.items():
            pooled[c].merge(st)
        counters.merge(r.counters)
    eta_t, eta_q = an.compute_efficiency(counters)
    if not reports:
        verdict = None
    else:
        ok = all(r.verdict is an.Verdict.ACCEPT for r in reports)
        verdict = (an.Verdict.ACCEPT if ok else an.Verdict.ABORT).value
    return {
        "sessions": len(reports),
        "verdict": verdict,
        "classes": [
            {"class": c.value, "events": st.events, "matched": st.matched, "errors": st.errors, "rate": st.rate}
            for c, st in pooled.items()
        ],
        "thresholds": {c.value: thresholds.get(c, an.DEFAULT_THRESHOLD) for c in an.SampleClass},
        "final_key_bits": counters.final_key_bits,
        "qubits_used": counters.qubits_used,
        "classical_bits_exchanged": counters.classical_bits,
        "eta_t": eta_t,
        "eta_q": eta_q,
        "session_reports": [r.to_dict() for r in reports],
    }


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4f}"


def report(agg: dict) -> str:
    """Human-readable summary of an aggregate report."""
    lines = [f"sessions: {agg['sessions']}   verdict: {agg['verdict'] or '-'}"]
    lines.append(f"{'class':<7} {'events':>8} {'matched':>8} {'errors':>7} {'rate':>8}")
    for c in agg["classes"]:
        lines.append(f"{c['class']:<7} {c['events']:>8} {c['matched']:>8} {c['errors']:>7} {_fmt(c['rate']):>8}")
    lines.append(f"eta_t: {_fmt(agg['eta_t'])}   eta_q: {_fmt(agg['eta_q'])}   final key bits: {agg['final_key_bits']}")
    for s in agg["session_reports"]:
        key = s["key_hex"]
        shown = "absent" if key is None else f"{key[:16]}... ({s['final_key_bits']} bits)"
        lines.append(f"  session {s['session']}: {s['verdict']}, key {shown}")
    return "\n".join(lines)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run(config: RunConfig) -> tuple[int, dict]:
    outcomes = run_sessions(config)
    agg = aggregate([o.report for o in outcomes], dict(config.thresholds))
    try:
        if config.report_path:
            Path(config.report_path).write_text(dump_json(agg))
        if config.transcript_path:
            with open(config.transcript_path, "w") as fh:
                for o in outcomes:
                    for rec in o.transcript:
                        fh.write(json.dumps({"session": o.report.index, **rec.to_dict()}, sort_keys=True) + "\n")
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO, agg
    return EXIT_OK, agg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="muqkd", description=__doc__)
    p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--sessions", type=int, help="override the number of sessions")
    p.add_argument("--transcript", help="write per-round transcript (JSON lines)")
    p.add_argument("--out", help="write the aggregate report here")
    p.add_argument("--workers", type=int, help="worker processes for sessions")
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load(args.config)
        overrides = {
            "seed": args.seed,
            "sessions": args.sessions,
            "transcript_path": args.transcript,
            "report_path": args.out,
            "workers": args.workers,
        }
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    status, agg = run(config)
    print(report(agg))
    return status


if __name__ == "__main__":
    sys.exit(main())
