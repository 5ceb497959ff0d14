"""Per-step simulation log and its CSV form.

Column order: ``t``, then for each turbine ``i`` (1-based) ``U_eff_i, omega_r_i,
pitch_i, tau_gen_i, P_dem_i, P_gen_i, thrust_i, mode_i, sat_i``, then ``r,
P_bar, e, u``.  Numbers are SI (pitch in deg) written with 9 significant
digits; ``mode_i`` is ``Tracking`` or ``GreedyFallback`` and ``sat_i`` is 0/1.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple, Sequence

from ..turbine import Mode

TURBINE_COLUMNS = ("U_eff", "omega_r", "pitch", "tau_gen", "P_dem", "P_gen", "thrust", "mode", "sat")
FARM_COLUMNS = ("r", "P_bar", "e", "u")


class TurbineRecord(NamedTuple):
    u_eff: float
    omega_r: float
    pitch: float
    tau_gen: float
    p_dem: float
    p_gen: float
    thrust: float
    mode: Mode
    saturated: bool


class StepRecord(NamedTuple):
    t: float
    turbines: tuple[TurbineRecord, ...]
    r: float
    p_bar: float
    e: float
    u: float


def header(n_turbines: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n_turbines + 1):
        cols.extend(f"{name}_{i}" for name in TURBINE_COLUMNS)
    cols.extend(FARM_COLUMNS)
    return cols


def _num(x: float) -> str:
    return format(x, ".9g")


def quantize(x: float) -> float:
    """Value as it reads back from the CSV."""
    return float(_num(x))


def _row(rec: StepRecord) -> list[str]:
    row = [_num(rec.t)]
    for tr in rec.turbines:
        row.extend(_num(v) for v in tr[:7])
        row.append(tr.mode.value)
        row.append("1" if tr.saturated else "0")
    row.extend(_num(v) for v in (rec.r, rec.p_bar, rec.e, rec.u))
    return row


def write_records(records: Sequence[StepRecord], path: str | Path, n_turbines: int | None = None) -> Path:
    """Write ``records`` as CSV; ``n_turbines`` is needed only for an empty log."""
    path = Path(path)
    if records:
        n_turbines = len(records[0].turbines)
    elif n_turbines is None:
        raise ValueError("n_turbines is required to write an empty record list")
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header(n_turbines))
            for rec in records:
                writer.writerow(_row(rec))
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc
    return path


def read_records(path: str | Path) -> list[StepRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        cols = next(reader)
        n = (len(cols) - 1 - len(FARM_COLUMNS)) // len(TURBINE_COLUMNS)
        out = []
        for row in reader:
            turbines = []
            for i in range(n):
                base = 1 + i * len(TURBINE_COLUMNS)
                vals = [float(v) for v in row[base:base + 7]]
                turbines.append(TurbineRecord(*vals, Mode(row[base + 7]), row[base + 8] == "1"))
            farm = [float(v) for v in row[-len(FARM_COLUMNS):]]
            out.append(StepRecord(float(row[0]), tuple(turbines), *farm))
    return out


def quantized(rec: StepRecord) -> StepRecord:
    """``rec`` rounded to the precision it is written with."""
    turbines = tuple(
        TurbineRecord(*(quantize(v) for v in tr[:7]), tr.mode, tr.saturated) for tr in rec.turbines
    )
    return StepRecord(quantize(rec.t), turbines, quantize(rec.r), quantize(rec.p_bar),
                      quantize(rec.e), quantize(rec.u))
