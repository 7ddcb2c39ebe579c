"""Serialization of traces and reports, plus the matching readers.

Every file this package writes must be readable back by the functions
here (the CLI and harness tests round-trip them).  Alpha = inf cannot be
expressed in strict JSON, so it is encoded as the string "inf" and
decoded on the way back in; all other numbers use Python's shortest
round-trip float formatting, which parses back to the identical double.
"""

from __future__ import annotations

import csv
import io
import json
import math

from .core import RunTrace, StepRecord

__all__ = [
    "encode_alpha",
    "decode_alpha",
    "dump_json_line",
    "trace_to_lines",
    "write_trace",
    "read_trace",
    "run_report_dict",
    "write_run_report",
    "read_run_report",
    "campaign_report_to_csv",
    "read_campaign_csv",
]


def encode_alpha(alpha: float) -> float | str:
    return "inf" if math.isinf(alpha) else float(alpha)


def decode_alpha(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in {"inf", "infinity"}:
            return math.inf
        raise ValueError(f"alpha string must be 'inf', got {value!r}")
    return float(value)


def dump_json_line(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def trace_to_lines(trace: RunTrace, config_echo: dict | None = None) -> list[str]:
    """JSON-lines form of a trace: one header line, then one step per line."""
    header = {
        "start_point": trace.start_point.tolist(),
        "final_point": trace.final_point.tolist(),
        "initial_score": trace.initial_score,
        "final_score": trace.final_score,
        "hamming_drift": trace.hamming_drift,
        "evaluations": trace.evaluations,
    }
    if config_echo is not None:
        header["config"] = config_echo
    lines = [dump_json_line(header)]
    lines.extend(dump_json_line(step.to_dict()) for step in trace.steps)
    return lines


def write_trace(path, trace: RunTrace, config_echo: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(trace_to_lines(trace, config_echo))


def read_trace(path):
    """Read a trace file back into (header dict, list of StepRecord)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"trace file {path} is empty")
    header = json.loads(lines[0])
    steps = [StepRecord.from_dict(json.loads(line)) for line in lines[1:]]
    return header, steps


def run_report_dict(trace: RunTrace, config_echo: dict) -> dict:
    return {
        "config": config_echo,
        "summary": {
            "initial_score": trace.initial_score,
            "final_score": trace.final_score,
            "hamming_drift": trace.hamming_drift,
            "evaluations": trace.evaluations,
        },
        "start_point": trace.start_point.tolist(),
        "final_point": trace.final_point.tolist(),
    }


def write_run_report(path, trace: RunTrace, config_echo: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json_line(run_report_dict(trace, config_echo)))


def read_run_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


CSV_COLUMNS = [
    "cell_index",
    "dimension",
    "budget",
    "alpha",
    "replicas",
    "failed_runs",
    "status",
    "initial_score_mean",
    "initial_score_stderr",
    "final_score_mean",
    "final_score_stderr",
    "improvement_rate",
    "drift_mean",
    "drift_stderr",
    "drift_ratio_mean",
    "mutated_union_mean",
]


def campaign_report_to_csv(cells: list[dict]) -> str:
    """One CSV row per cell, deterministic field order and formatting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for cell in cells:
        writer.writerow([_csv_value(cell[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def _csv_value(value):
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, str):
        return value
    return value


def read_campaign_csv(path) -> list[dict]:
    """Parse a campaign CSV back to typed per-cell dictionaries."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row: dict = {}
            for key, text in raw.items():
                if key in {"cell_index", "dimension", "budget", "replicas", "failed_runs"}:
                    row[key] = int(text)
                elif key == "status":
                    row[key] = text
                elif key == "alpha":
                    # CSV fields are text; only config files restrict
                    # alpha strings to the literal "inf".
                    row[key] = math.inf if text.strip().lower() == "inf" else float(text)
                elif text == "":
                    row[key] = None
                else:
                    row[key] = float(text)
            rows.append(row)
    return rows
