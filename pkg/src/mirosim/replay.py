"""Independent reader for trajectory logs: recount goals and draw trajectories.

Deliberately shares no code with the match loop beyond the version tag,
so a log that disagrees with its match result is caught here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

from .harness import LOG_VERSION

TEAM_COLOURS = {"home": ("#1f5fbf", "#6f9fe8", "#0b2f6f"), "away": ("#c8461b", "#f0955f", "#7a2408")}


class LogFormatError(ValueError):
    pass


@dataclass
class TrajectoryLog:
    columns: list[str]
    rows: list[dict[str, str]]

    def robot_tags(self) -> list[str]:
        return [c[: -len("_x_mm")] for c in self.columns if c.endswith("_x_mm")]

    def series(self, column: str) -> list[Optional[float]]:
        return [float(r[column]) if r[column] != "" else None for r in self.rows]


@dataclass
class ReplaySummary:
    ticks: int
    goals: dict[str, int]
    final_score: dict[str, int]
    goal_ticks: list[tuple[int, str]]
    kicks: dict[str, int]
    problems: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.problems


def read_log(path: str | Path) -> TrajectoryLog:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# {LOG_VERSION}":
            raise LogFormatError(f"{path}: expected header '# {LOG_VERSION}', found {first!r}")
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise LogFormatError(f"{path}: missing column header")
        return TrajectoryLog(list(reader.fieldnames), list(reader))


def verify_log(log: TrajectoryLog) -> ReplaySummary:
    """Recount goals from event tokens and check them against the score columns."""
    goals = {"home": 0, "away": 0}
    kicks = {"home": 0, "away": 0}
    goal_ticks: list[tuple[int, str]] = []
    problems: list[str] = []
    for i, row in enumerate(log.rows):
        tick = int(row["tick"])
        if tick != i:
            problems.append(f"row {i}: tick {tick} out of sequence")
        for token in filter(None, row["events"].split(";")):
            kind, _, who = token.partition(":")
            if kind == "goal":
                if who not in goals:
                    problems.append(f"tick {tick}: goal for unknown team {who!r}")
                    continue
                goals[who] += 1
                goal_ticks.append((tick, who))
            elif kind == "kick":
                team = who.rstrip("0123456789")
                if team in kicks:
                    kicks[team] += 1
        for team in goals:
            logged = int(row[f"score_{team}"])
            if logged != goals[team]:
                problems.append(f"tick {tick}: score_{team}={logged} but {goals[team]} goal events so far")
                goals[team] = logged  # resynchronise so one slip is reported once
    final = {t: int(log.rows[-1][f"score_{t}"]) if log.rows else 0 for t in goals}
    return ReplaySummary(len(log.rows), goals, final, goal_ticks, kicks, problems)


def render_svg(log: TrajectoryLog, field_length: float = 2200.0, field_width: float = 1800.0,
               goal_width: float = 400.0, scale: float = 0.3, every: int = 2) -> str:
    """Self-contained SVG of every robot's and the ball's path over the pitch."""
    margin = 40.0
    hl, hw = field_length / 2, field_width / 2
    width = field_length * scale + 2 * margin
    height = field_width * scale + 2 * margin

    def px(x: float, y: float) -> tuple[float, float]:
        return margin + (x + hl) * scale, margin + (hw - y) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#f4f7f2"/>',
    ]
    x0, y0 = px(-hl, hw)
    parts.append(f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{field_length * scale:.1f}" '
                 f'height="{field_width * scale:.1f}" fill="#dcebd5" stroke="#333" stroke-width="1.5"/>')
    cx_top, cy_top = px(0, hw)
    cx_bot, cy_bot = px(0, -hw)
    parts.append(f'<line x1="{cx_top:.1f}" y1="{cy_top:.1f}" x2="{cx_bot:.1f}" y2="{cy_bot:.1f}" '
                 f'stroke="#888" stroke-dasharray="4 4"/>')
    for sx in (-1, 1):
        gx, gy = px(sx * hl, goal_width / 2)
        depth = 60 * scale
        gx0 = gx if sx > 0 else gx - depth
        parts.append(f'<rect x="{gx0:.1f}" y="{gy:.1f}" width="{depth:.1f}" '
                     f'height="{goal_width * scale:.1f}" fill="none" stroke="#333" stroke-width="1.5"/>')

    def polyline(xs, ys, colour, width_px, label):
        pts = [px(x, y) for x, y in zip(xs[::every], ys[::every]) if x is not None and y is not None]
        if not pts:
            return
        coords = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" '
                     f'stroke-width="{width_px}" stroke-opacity="0.8"><title>{escape(label)}</title></polyline>')
        sx_, sy_ = pts[0]
        parts.append(f'<circle cx="{sx_:.1f}" cy="{sy_:.1f}" r="3" fill="{colour}"/>')

    for tag in log.robot_tags():
        team = tag.rstrip("0123456789")
        shades = TEAM_COLOURS.get(team, ("#555", "#777", "#333"))
        colour = shades[int(tag[len(team):]) % len(shades)]
        polyline(log.series(f"{tag}_x_mm"), log.series(f"{tag}_y_mm"), colour, 1.2, tag)
    polyline(log.series("ball_x"), log.series("ball_y"), "#111", 1.6, "ball")

    summary = verify_log(log)
    caption = (f"{summary.ticks} ticks   home {summary.final_score['home']} : "
               f"{summary.final_score['away']} away")
    parts.append(f'<text x="{margin:.0f}" y="{margin - 12:.0f}" font-family="sans-serif" '
                 f'font-size="14" fill="#222">{escape(caption)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
