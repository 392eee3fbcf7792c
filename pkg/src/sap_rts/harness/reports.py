"""Tabular outputs (CSV) for external plotting."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from .experiment import Bar, ExperimentReport
from .match import KINDS, MatchResult

METRICS = ("damage_dealt", "resources_harvested", "units_produced")


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def write_win_matrix(path: Path, report: ExperimentReport | None) -> Path:
    header = ["agent", "opponent", "wins", "draws", "losses", "win_rate", "draw_rate", "loss_rate", "score"]
    rows = []
    if report is not None:
        for (a, b), cell in sorted(report.cells.items()):
            rows.append([a, b, cell.wins, cell.draws, cell.losses, *(round(r, 4) for r in cell.rates()),
                         round(cell.score(), 4)])
    return _write(path, header, rows)


def write_confusion(path: Path, confusion: Sequence[Sequence[int]] | None) -> Path:
    rows = []
    if confusion is not None:
        (tn, fp), (fn, tp) = confusion
        rows = [["loss_or_draw", tn, fp], ["win", fn, tp]]
    return _write(path, ["truth \\ predicted", "loss_or_draw", "win"], rows)


def write_action_series(path: Path, results: Sequence[MatchResult]) -> Path:
    rows = []
    for m, res in enumerate(results):
        for bucket, players in sorted(res.action_histogram.items()):
            for p, counts in enumerate(players):
                rows.append([m, res.agents[p], p + 1, bucket * 100, *(counts[k] for k in KINDS)])
    return _write(path, ["match", "agent", "player", "tick", *KINDS], rows)


def write_metric_series(path: Path, results: Sequence[MatchResult]) -> Path:
    rows = []
    for m, res in enumerate(results):
        for bucket, players in sorted(res.metric_series.items()):
            for p, vals in enumerate(players):
                rows.append([m, res.agents[p], p + 1, bucket * 100, *(vals[k] for k in METRICS)])
    return _write(path, ["match", "agent", "player", "tick", *METRICS], rows)


def write_bars(path: Path, bars: Sequence[Bar]) -> Path:
    rows = [[b.opponent.to_text(), b.response.to_text(), round(b.predicted, 4), b.wins, b.draws,
             b.episodes, round(b.score, 4)] for b in bars]
    return _write(path, ["opponent", "response", "predicted", "wins", "draws", "episodes", "score"], rows)


def write_recognition(path: Path, table: dict | None) -> Path:
    rows = []
    if table is not None:
        for value, dims in table["by_value"].items():
            rows += [[f"aggression={str(value).lower()}", d, round(acc, 4)] for d, acc in dims.items()]
        rows += [["overall", d, round(acc, 4)] for d, acc in table["overall"].items()]
    return _write(path, ["group", "dimension", "accuracy"], rows)


def emit_reports(out_dir: str | Path, report: ExperimentReport | None = None,
                 results: Sequence[MatchResult] = (), confusion=None, bars: Sequence[Bar] = (),
                 recognition: dict | None = None) -> list[Path]:
    """Write every table; missing inputs give header-only files."""
    out = Path(out_dir)
    if report is not None and not results:
        results = report.results
    return [
        write_win_matrix(out / "win_matrix.csv", report),
        write_confusion(out / "confusion_matrix.csv", confusion),
        write_action_series(out / "action_series.csv", results),
        write_metric_series(out / "metric_series.csv", results),
        write_bars(out / "searched_response.csv", bars),
        write_recognition(out / "recognition_accuracy.csv", recognition),
    ]
