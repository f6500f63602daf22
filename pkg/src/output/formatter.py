"""Output formatting for selection and evaluation runs.

Generates JSON (machine-readable, canonical key order) and aligned text
(human-readable) outputs, plus line-delimited traces, pair exports and
plot-ready sweep CSVs.
"""

import csv
import json
from pathlib import Path
from typing import IO, Iterable, Optional

from ..core.models import Record, SelectionTrace
from ..evaluation.ablation import AblationReport
from ..evaluation.harness import EvalReport
from ..reward.consistency import PairScoreSummary, RewardRecord
from ..reward.pairs import PairRecord

SWEEP_COLUMNS = ("variant", "ex", "n_included", "n_excluded", "resample_rate", "wall_ms")


def canonical_json(data: dict) -> str:
    """Sorted keys, two-space indent, trailing newline: stable bytes for equal data."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _jsonl_line(record: Record) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n"


class TraceWriter:
    """Streams SelectionTraces to a JSONL file as tasks complete."""

    def __init__(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        self.path = path
        self._fh: Optional[IO[str]] = open(path, "w", encoding="utf-8")
        self.count = 0

    def __call__(self, trace: SelectionTrace) -> None:
        self._fh.write(_jsonl_line(trace))
        self._fh.flush()
        self.count += 1

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class OutputFormatter:
    """Formats run output in multiple formats."""

    def __init__(self, output_dir: Path):
        """
        Initialize formatter.

        Args:
            output_dir: Base directory for relative output paths
        """
        self.output_dir = output_dir

    def _resolve(self, path: Path) -> Path:
        path = path if path.is_absolute() else self.output_dir / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def timings_path(report_path: Path) -> Path:
        return report_path.with_name(report_path.stem + ".timings.json")

    def save_report(self, report: EvalReport, path: Path) -> Path:
        """
        Save an evaluation report.

        Creates:
        - <path>: canonical report JSON (identical bytes for identical runs)
        - <stem>.timings.json: wall-clock timings and backend usage (calls,
          cache hits, tokens, cost per stage)

        Returns:
            Path to the report file
        """
        path = self._resolve(path)
        path.write_text(self.format_report_json(report), encoding="utf-8")
        sidecar = {"timings": report.timings, "usage": report.usage}
        self.timings_path(path).write_text(canonical_json(sidecar), encoding="utf-8")
        return path

    def format_report_json(self, report: EvalReport) -> str:
        return canonical_json(report.to_dict())

    def format_ex_line(self, report: EvalReport) -> str:
        status = "" if report.complete else "  [INCOMPLETE]"
        return (
            f"EX {report.ex:.2f}  ({report.n_correct}/{report.n_included} correct, "
            f"{report.n_excluded} excluded){status}"
        )

    def format_summary(self, report: EvalReport) -> str:
        """Aligned-text summary of an evaluation report."""

        def fmt(value) -> str:
            if value is None:
                return "-"
            if isinstance(value, float):
                return f"{value:.4f}"
            return str(value)

        rows = [
            ("mode", report.config.mode),
            ("tasks", report.n_tasks),
            ("included", report.n_included),
            ("excluded", report.n_excluded),
            ("correct", report.n_correct),
            ("EX", f"{report.ex:.2f}"),
            ("candidate recall", report.candidate_recall),
            ("initial recall", report.initial_recall),
            ("resample rate", report.resample_rate),
            ("judge precision", report.judge_precision),
            ("judge recall", report.judge_recall),
        ]
        rows.extend((f"variance ({k})", v) for k, v in sorted(report.within_group_variance.items()))
        rows.extend((f"excluded: {k}", v) for k, v in report.exclusions.items())
        rows.extend((f"flag: {k}", v) for k, v in report.flag_counts.items())
        rows.extend((f"calls: {k}", v) for k, v in report.call_counts.items())
        if not report.complete:
            rows.append(("status", "INCOMPLETE (backend failure)"))

        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label.ljust(width)}  {fmt(value)}" for label, value in rows) + "\n"

    def save_ablation(self, ablation: AblationReport, path: Path) -> Path:
        """
        Save an ablation run.

        Creates:
        - <path>: sweep CSV
        - <stem>.json: every variant's report, deltas and the tau check

        Returns:
            Path to the CSV file
        """
        path = self._resolve(path)
        with open(path, "w", newline="", encoding="utf-8") as f:
            self.write_sweep_csv(ablation, f)
        path.with_suffix(".json").write_text(canonical_json(ablation.to_dict()), encoding="utf-8")
        return path

    def write_sweep_csv(self, ablation: AblationReport, fh: IO[str]) -> None:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(ablation.rows())

    def format_ablation_table(self, ablation: AblationReport) -> str:
        """Aligned-text delta table against the baseline."""
        header = ("variant", "EX", "delta", "included", "resample")
        lines = [header]
        for v in ablation.variants:
            lines.append(
                (
                    v.name + (" *" if v.name == ablation.baseline else ""),
                    f"{v.report.ex:.2f}",
                    f"{v.delta_ex:+.2f}" if v.delta_ex is not None else "-",
                    str(v.report.n_included),
                    "-" if v.report.resample_rate is None else f"{v.report.resample_rate:.3f}",
                )
            )
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        text = "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in lines)
        if ablation.tau_check is not None:
            check = ablation.tau_check
            means = ", ".join(f"{t:g}:{'-' if m is None else f'{m:.3f}'}" for t, m in zip(check.taus, check.mean_r_list))
            text += f"\n\ntau sweep mean r_list  {means}  ({'monotone' if check.monotone else 'NOT monotone'})"
        return text + "\n"

    def save_pairs(
        self,
        pairs: Iterable[PairRecord],
        path: Path,
        rewards: Optional[list[RewardRecord]] = None,
        summary: Optional[PairScoreSummary] = None,
    ) -> Path:
        """
        Save a pair export as JSONL, one pair per line.

        With rewards, each line also carries the ranker's reward record, and
        the summary goes to <stem>.summary.json.
        """
        path = self._resolve(path)
        pairs = list(pairs)
        with open(path, "w", encoding="utf-8") as f:
            for i, pair in enumerate(pairs):
                row = pair.to_dict()
                if rewards is not None:
                    row["reward"] = rewards[i].to_dict()
                f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
        if summary is not None:
            path.with_name(path.stem + ".summary.json").write_text(canonical_json(summary.to_dict()), encoding="utf-8")
        return path

    def save_trace(self, trace: SelectionTrace, path: Path) -> Path:
        path = self._resolve(path)
        path.write_text(canonical_json(trace.to_dict()), encoding="utf-8")
        return path
