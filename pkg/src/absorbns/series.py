"""Sampled diagnostic time series and its CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("t", "energy", "enstrophy", "lsigma_pow", "forcing_power")


@dataclass
class EnergySeries:
    """Columns of per-sample diagnostics; ``t`` is strictly increasing."""

    t: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    enstrophy: list[float] = field(default_factory=list)
    lsigma_pow: list[float] = field(default_factory=list)
    forcing_power: list[float] = field(default_factory=list)

    def append(self, t, energy, enstrophy, lsigma_pow, forcing_power):
        if self.t and not t > self.t[-1]:
            raise ValueError(f"sample time {t} does not follow {self.t[-1]}")
        if energy < 0 or enstrophy < 0 or lsigma_pow < 0:
            raise ValueError(f"negative diagnostic at t={t}")
        self.t.append(float(t))
        self.energy.append(float(energy))
        self.enstrophy.append(float(enstrophy))
        self.lsigma_pow.append(float(lsigma_pow))
        self.forcing_power.append(float(forcing_power))

    def __len__(self):
        return len(self.t)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: np.asarray(getattr(self, name), dtype=float) for name in CSV_COLUMNS}

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    @property
    def e0(self) -> float:
        return self.energy[0]

    @classmethod
    def from_arrays(cls, **cols) -> "EnergySeries":
        t = np.asarray(cols["t"], dtype=float)
        zeros = np.zeros_like(t)
        out = cls()
        for i in range(len(t)):
            out.append(
                t[i],
                np.asarray(cols["energy"])[i],
                np.asarray(cols.get("enstrophy", zeros))[i],
                np.asarray(cols.get("lsigma_pow", zeros))[i],
                np.asarray(cols.get("forcing_power", zeros))[i],
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in zip(*(getattr(self, name) for name in CSV_COLUMNS)):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "EnergySeries":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ValueError(f"series CSV header must be {','.join(CSV_COLUMNS)}, got {header}")
        out = cls()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            out.append(*(float(v) for v in row))
        return out

    @classmethod
    def read_csv(cls, path) -> "EnergySeries":
        return cls.from_csv(Path(path).read_text())
