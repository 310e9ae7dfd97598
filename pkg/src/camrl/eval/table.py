"""Comparison tables: a tab-separated machine form and an aligned text form."""
from __future__ import annotations

from dataclasses import dataclass

from .metrics import MetricsRecord

COLUMNS = ("Success", "Collision", "Timeout", "Time", "Disc.Freq", "Disc.Dist")
MISSING = "—"


@dataclass(frozen=True)
class TableRow:
    success: float
    collision: float
    timeout: float
    time: tuple[float, float] | None  # (mean, std)
    disc_freq: float
    disc_dist: tuple[float, float] | None

    @classmethod
    def from_metrics(cls, m: MetricsRecord) -> "TableRow":
        time = None if m.time_mean is None else (m.time_mean, m.time_std)
        dist = None if m.disc_dist_mean is None else (m.disc_dist_mean, m.disc_dist_std)
        return cls(m.success, m.collision, m.timeout, time, m.disc_freq, dist)

    def cells(self, fmt=repr) -> list[str]:
        def pm(v):
            return MISSING if v is None else f"{fmt(v[0])}±{fmt(v[1])}"

        return [fmt(self.success), fmt(self.collision), fmt(self.timeout), pm(self.time), fmt(self.disc_freq), pm(self.disc_dist)]


def _rows(records) -> dict[str, TableRow]:
    if not records:
        raise ValueError("need at least one policy record")
    return {k: v if isinstance(v, TableRow) else TableRow.from_metrics(v) for k, v in records.items()}


def render_table(records: dict) -> str:
    """Machine-readable form: tab-separated, floats in round-trippable repr."""
    lines = ["\t".join(("Policy",) + COLUMNS)]
    for name, row in _rows(records).items():
        lines.append("\t".join([name] + row.cells()))
    return "\n".join(lines) + "\n"


def _float(cell: str) -> float:
    return float(cell)


def _pair(cell: str):
    if cell == MISSING:
        return None
    mean, std = cell.split("±")
    return float(mean), float(std)


def parse_table(text: str) -> dict[str, TableRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split("\t")
    if tuple(header[1:]) != COLUMNS:
        raise ValueError(f"unexpected table header {header}")
    out = {}
    for ln in lines[1:]:
        name, s, c, t, time, df, dd = ln.split("\t")
        out[name] = TableRow(_float(s), _float(c), _float(t), _pair(time), _float(df), _pair(dd))
    return out


def format_table(records: dict, digits: int = 2) -> str:
    """Aligned human-readable rendering."""
    rows = _rows(records)
    body = [["Policy", *COLUMNS]]
    for name, row in rows.items():
        body.append([name] + row.cells(lambda v: f"{v:.{digits}f}"))
    widths = [max(len(r[i]) for r in body) for i in range(len(body[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
