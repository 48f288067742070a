"""Report assembly (JSON-ready dicts) and text rendering."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .assignments import Constraint, cross_check, enumerate_satisfying, ghz_constraints, pair_contexts, parity_witness
from .dsl import load
from .perspective import Context, builtin_contexts, exact_distribution, sample
from .scenario import Encoding, Schedule, full_protocol
from .statevec import TOL

BUILTIN_NAME = "ghz3"


@dataclass(frozen=True)
class Scenario:
    name: str
    schedule: Schedule
    contexts: tuple[Context, ...]
    constraints: tuple[Constraint, ...]


@dataclass(frozen=True)
class RunConfig:
    scenario_path: str | None = None
    encoding: Encoding = Encoding.LITERAL
    seed: int = 0
    shots: int = 10000
    output: str = "text"

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.output not in ("text", "json"):
            raise ValueError(f"unknown output mode {self.output!r}")


def load_scenario(config: RunConfig) -> Scenario:
    if config.scenario_path is None:
        return Scenario(
            BUILTIN_NAME,
            full_protocol(config.encoding),
            tuple(builtin_contexts(config.encoding)),
            tuple(ghz_constraints()),
        )
    path = Path(config.scenario_path)
    schedule, contexts, constraints = load(path, config.encoding)
    return Scenario(path.stem, schedule, tuple(contexts), tuple(constraints))


def num(x: float) -> float:
    """Round to 15 significant digits; folds -0.0 into 0.0."""
    return float(f"{x:.15g}") + 0.0


def _meta(command: str, config: RunConfig, scenario: Scenario) -> dict:
    return {
        "artifact": "relfacts",
        "version": __version__,
        "command": command,
        "scenario": scenario.name,
        "encoding": config.encoding.value,
        "seed": config.seed,
        "shots": config.shots,
    }


def context_entry(c: Context) -> dict:
    dist = exact_distribution(c)
    products = dist.products()
    return {
        "name": c.name,
        "labels": list(dist.labels),
        "distribution": [{"tuple": list(t), "probability": num(p if p > TOL else 0.0)} for t, p in dist.entries],
        "expectation": num(dist.expectation()),
        "deterministic": len(products) == 1,
    }


def sample_entry(c: Context, shots: int, seed: int) -> dict:
    draws = sample(c, shots, seed)
    counts = Counter(draws)
    parity = Counter(math.prod(t) for t in draws)
    return {
        "shots": shots,
        "counts": [{"tuple": list(t), "count": counts.get(t, 0)} for t, _ in exact_distribution(c).entries],
        "product_frequency": {"+1": num(parity[1] / shots), "-1": num(parity[-1] / shots)},
    }


def absolute_check(scenario: Scenario) -> dict:
    cs = list(scenario.constraints)
    pairs = pair_contexts(cs, scenario.contexts)
    paired = [(c, ctx) for c, ctx in zip(cs, pairs) if ctx is not None]
    checked = cross_check([c for c, _ in paired], [ctx for _, ctx in paired])
    passed = {row.constraint: row.passed for row in checked.rows}
    count = len(enumerate_satisfying(cs))
    cert = parity_witness(cs)
    return {
        "constraints": [{"name": c.name, "labels": list(c.labels), "parity": c.parity} for c in cs],
        "satisfying_count": count,
        "verdict": "SAT" if count else "UNSAT",
        "certificate": None
        if cert is None
        else {"constraints": [c.name for c in cert.constraints], "explanation": cert.explain()},
        "cross_check": [
            {"constraint": c.name, "context": None if ctx is None else ctx.name, "pass": passed.get(c) if ctx else None}
            for c, ctx in zip(cs, pairs)
        ],
    }


def build(command: str, config: RunConfig, scenario: Scenario) -> dict:
    """Report for ``command`` (expect, sample, check-absolute or report)."""
    report: dict = {"meta": _meta(command, config, scenario)}
    if command in ("expect", "sample", "report"):
        entries = []
        for c in scenario.contexts:
            entry = context_entry(c)
            if command != "expect":
                entry["sample"] = sample_entry(c, config.shots, config.seed)
            entries.append(entry)
        report["contexts"] = entries
    if command in ("check-absolute", "report"):
        report["absolute_check"] = absolute_check(scenario)
    return report


def failures(report: dict) -> list[str]:
    """Invariant or check failures recorded in a report."""
    out = []
    for entry in report.get("contexts", []):
        total = sum(d["probability"] for d in entry["distribution"])
        if abs(total - 1.0) > 1e-12:
            out.append(f"context {entry['name']}: probabilities sum to {total}")
        if "sample" in entry and entry["deterministic"]:
            support = {
                math.prod(d["tuple"]) for d in entry["distribution"] if d["probability"] > 0
            }
            (sign,) = support
            freq = entry["sample"]["product_frequency"]["+1" if sign == 1 else "-1"]
            if freq != 1.0:
                out.append(f"context {entry['name']}: sampled product {sign:+d} only with frequency {freq}")
    for row in report.get("absolute_check", {}).get("cross_check", []):
        if row["pass"] is False:
            out.append(f"constraint {row['constraint']} fails in context {row['context']}")
    return out


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def _fmt(x) -> str:
    return json.dumps(x)


def _table(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]


def _tuple(t) -> str:
    return " ".join(f"{v:+d}" for v in t)


def to_text(report: dict) -> str:
    meta = report["meta"]
    lines = [
        f"relfacts {meta['version']}  {meta['command']}  scenario={meta['scenario']}  "
        f"encoding={meta['encoding']}  seed={meta['seed']}  shots={meta['shots']}"
    ]
    contexts = report.get("contexts")
    if contexts:
        lines += ["", "contexts"]
        rows = [["name", "labels", "expectation", "deterministic"]]
        rows += [[e["name"], " ".join(e["labels"]), _fmt(e["expectation"]), "yes" if e["deterministic"] else "no"] for e in contexts]
        lines += _table(rows)
        for e in contexts:
            lines += ["", f"{e['name']}: {' '.join(e['labels'])}"]
            header = ["tuple", "probability"]
            counts = {}
            if "sample" in e:
                header.append("count")
                counts = {tuple(c["tuple"]): c["count"] for c in e["sample"]["counts"]}
            rows = [header]
            for d in e["distribution"]:
                row = [_tuple(d["tuple"]), _fmt(d["probability"])]
                if counts:
                    row.append(str(counts[tuple(d["tuple"])]))
                rows.append(row)
            lines += _table(rows)
            if "sample" in e:
                freq = e["sample"]["product_frequency"]
                lines.append(f"sampled product frequency: +1 {_fmt(freq['+1'])}  -1 {_fmt(freq['-1'])}")
    check = report.get("absolute_check")
    if check is not None:
        lines += ["", "absolute assignment check"]
        rows = [["constraint", "product", "context", "cross-check"]]
        pass_of = {row["constraint"]: row for row in check["cross_check"]}
        for c in check["constraints"]:
            row = pass_of[c["name"]]
            status = "-" if row["pass"] is None else ("PASS" if row["pass"] else "FAIL")
            rows.append([c["name"], f"{'*'.join(c['labels'])} = {c['parity']:+d}", row["context"] or "-", status])
        if check["constraints"]:
            lines += _table(rows)
        lines.append(f"satisfying assignments: {check['satisfying_count']} of 64  ({check['verdict']})")
        cert = check["certificate"]
        if cert:
            lines.append(f"parity certificate: {', '.join(cert['constraints'])}")
            lines.append(f"  {cert['explanation']}")
        else:
            lines.append("parity certificate: none")
    return "\n".join(lines) + "\n"
