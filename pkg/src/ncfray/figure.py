"""Long/short subdivision of the unit interval by multiples of ``alpha``.

At level ``n`` the points ``S(c_1..c_n) = sum c_k D_k`` cut ``[0, 1)`` into
cells of two lengths: long ones of width ``D_n`` and short ones of width
``D_n - D_{n+1}``. Since ``a D_{n+1} = D_n + D_{n+2}``, a long cell splits
into ``a_{n+1} - 1`` long cells and one short cell, and a short cell into
``a_{n+1} - 2`` long cells and one short cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ncf import NcfExpansion, Terminated

__all__ = ["Cell", "figure_cells", "cell_counts", "run_figure", "MAX_LEVELS"]

MAX_LEVELS = 8

_WIDTH = 1000
_ROW = 40
_BAR = 24
_COLORS = {True: "#3b6ea5", False: "#d08c2b"}


@dataclass(frozen=True)
class Cell:
    level: int
    prefix: tuple
    start: float
    width: float
    long: bool


def _widths(alpha: NcfExpansion, levels: int) -> list[float]:
    out = [1.0]
    for k in range(1, levels + 2):
        try:
            out.append(float(alpha.D(k)))
        except Terminated:
            out.append(0.0)
    return out


def figure_cells(alpha: NcfExpansion, levels: int) -> list[list[Cell]]:
    """Cells of levels ``1..levels``, left to right within each level.

    Rows stop early when a rational ``alpha`` runs out of partial quotients.
    """
    if not 1 <= levels <= MAX_LEVELS:
        raise ValueError(f"levels must be between 1 and {MAX_LEVELS}")
    D = _widths(alpha, levels)
    rows: list[list[Cell]] = []
    parents = [Cell(0, (), 0.0, 1.0, True)]
    for n in range(1, levels + 1):
        try:
            a = alpha.digit(n)
        except Terminated:
            break
        row = []
        for par in parents:
            nlong = a - 1 if par.long else a - 2
            for c in range(nlong + 1):
                is_long = c < nlong
                width = D[n] if is_long else D[n] - D[n + 1]
                row.append(Cell(n, par.prefix + (c,), par.start + c * D[n], width, is_long))
        rows.append(row)
        parents = row
    return rows


def cell_counts(alpha: NcfExpansion, levels: int) -> list[dict]:
    """Per level: long/short totals and the split of each parent kind."""
    rows = figure_cells(alpha, levels)
    out = []
    for n, row in enumerate(rows, start=1):
        entry = {
            "level": n,
            "long": sum(c.long for c in row),
            "short": sum(not c.long for c in row),
        }
        if n > 1:
            parents = {c.prefix: c.long for c in rows[n - 2]}
            splits: dict = {}
            for c in row:
                kind = "inLong" if parents[c.prefix[:-1]] else "inShort"
                pair = splits.setdefault(c.prefix[:-1], [kind, 0, 0])
                pair[1 if c.long else 2] += 1
            for kind, nl, ns in splits.values():
                entry.setdefault(kind, [nl, ns])
        out.append(entry)
    return out


def _fmt(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return s if s not in ("", "-0") else "0"


def run_figure(alpha: NcfExpansion, levels: int, title: Optional[str] = None) -> str:
    """SVG of the long/short picture, one row per level, 1000 units wide."""
    rows = figure_cells(alpha, levels)
    height = _ROW * (len(rows) + 1)
    label = title if title is not None else f"long/short cells for {alpha.describe()}"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH + 80}" height="{height}" '
        f'viewBox="0 0 {_WIDTH + 80} {height}">',
        f'<title>{label}</title>',
        '<g font-family="monospace" font-size="12">',
    ]
    for n, row in enumerate(rows, start=1):
        y = _ROW * n - _BAR // 2
        out.append(f'<text x="0" y="{y + _BAR // 2 + 4}">n={n}</text>')
        for c in row:
            x = 60 + c.start * _WIDTH
            w = c.width * _WIDTH
            out.append(
                f'<rect x="{_fmt(x)}" y="{y}" width="{_fmt(w)}" height="{_BAR}" '
                f'fill="{_COLORS[c.long]}" stroke="#ffffff" stroke-width="0.5"/>'
            )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
