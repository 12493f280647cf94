"""Corpus-level evaluation: string accuracy, whole-ticket accuracy and the
timing harness."""
from __future__ import annotations

import time
import tracemalloc
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence


@dataclass
class MetricsReport:
    p_char: float
    p_ticket: float
    r_char: int
    n_char: int
    r_ticket: int
    n_ticket: int
    per_stage: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    timing: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "p_char": self.p_char,
            "p_ticket": self.p_ticket,
            "counts": {"r_char": self.r_char, "n_char": self.n_char,
                       "r_ticket": self.r_ticket, "n_ticket": self.n_ticket},
            "per_stage": {k: {"precision": v[0], "recall": v[1], "f1": v[2]}
                          for k, v in self.per_stage.items()},
            "timing": self.timing,
        }

    def to_table(self) -> str:
        lines = [
            f"{'metric':<18}{'value':>12}",
            f"{'p_char':<18}{self.p_char:>12.4f}",
            f"{'p_ticket':<18}{self.p_ticket:>12.4f}",
            f"{'strings':<18}{f'{self.r_char}/{self.n_char}':>12}",
            f"{'tickets':<18}{f'{self.r_ticket}/{self.n_ticket}':>12}",
        ]
        for stage, (p, r, f1) in sorted(self.per_stage.items()):
            lines.append(f"{stage:<18}P {p:.3f}  R {r:.3f}  F1 {f1:.3f}")
        return "\n".join(lines)


def _norm(s: str) -> str:
    return s.strip()


def p_char(results: Mapping[str, Mapping[str, str]],
           truth: Mapping[str, Mapping[str, str]]) -> tuple[float, int, int]:
    """Fraction of region strings recognized exactly, pooled over the corpus.

    Both mappings are ticket id -> region id -> string, aligned by id.
    Returns (ratio, correct, total)."""
    if set(truth) - set(results):
        missing = sorted(set(truth) - set(results))
        raise KeyError(f"results missing tickets: {missing[:5]}")
    correct = 0
    total = 0
    for tid, regions in truth.items():
        got = results[tid]
        for rid, text in regions.items():
            total += 1
            if rid in got and _norm(got[rid]) == _norm(text):
                correct += 1
    if total == 0:
        return 1.0, 0, 0
    return correct / total, correct, total


def p_ticket(results: Mapping[str, Mapping[str, str]],
             truth: Mapping[str, Mapping[str, str]],
             required: Mapping[str, Sequence[str]]) -> tuple[float, int, int]:
    """Fraction of tickets whose required business fields all match exactly.

    Mappings are ticket id -> field key -> value; `required` lists the keys
    each ticket must get right."""
    total = 0
    correct = 0
    for tid, fields in truth.items():
        if tid not in required:
            raise KeyError(f"no required-field declaration for ticket {tid}")
        total += 1
        got = results.get(tid, {})
        ok = all(
            key in got and key in fields and _norm(got[key]) == _norm(fields[key])
            for key in required[tid]
        )
        correct += ok
    if total == 0:
        return 1.0, 0, 0
    return correct / total, correct, total


def time_stage(stage: Callable, inputs: Sequence, warmup: int = 1
               ) -> tuple[float, float, int]:
    """Wall-clock timing of a stage over a batch of inputs.

    Returns (mean latency ms, throughput items/s, peak working set bytes).
    The first `warmup` iterations are excluded from timing. Memory figures
    are best-effort tracemalloc estimates, not normative.
    """
    if len(inputs) == 0:
        raise ValueError("need at least one input")
    for x in inputs[:warmup]:
        stage(x)
    tracemalloc.start()
    t0 = time.perf_counter()
    for x in inputs:
        stage(x)
    elapsed = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    mean_ms = elapsed / len(inputs) * 1000.0
    throughput = len(inputs) / elapsed if elapsed > 0 else float("inf")
    return mean_ms, throughput, int(peak)
