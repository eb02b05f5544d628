"""Per-iteration convergence records, CSV serialisation and the dissipation audit."""

import csv
import io
import math
from dataclasses import dataclass, field

CSV_HEADER = ("k", "tau", "V", "dV", "dgnorm2", "wall_ms")


@dataclass
class LogRow:
    k: int
    tau: float
    V: float
    dV: float
    dgnorm2: float
    wall_ms: float


@dataclass
class ConvergenceLog:
    """Rows for outer iterations ``k = 1..K``; ``v0`` is ``V(u^0)``.

    ``dgnorm2`` is ``sum_j (alpha_j / tau_k)^2``, the squared coefficient norm
    of the discrete gradient used by sweep ``k``.
    """

    v0: float
    rows: list = field(default_factory=list)
    stop_reason: str = ""

    def append(self, row):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    @property
    def values(self):
        return [self.v0] + [r.V for r in self.rows]

    @property
    def final_value(self):
        return self.rows[-1].V if self.rows else self.v0

    def telescoping_gap(self):
        """``|sum_k tau_k ||g_k||^2 - (V(u^0) - V(u^K))|``."""
        total = math.fsum(r.tau * r.dgnorm2 for r in self.rows)
        return abs(total - (self.v0 - self.final_value))

    def to_csv(self, path=None, wall_clock=True):
        """Write (or return) the CSV text; floats use ``repr`` so they round-trip.

        With ``wall_clock=False`` the ``wall_ms`` column is written as ``nan``
        so that repeated runs produce byte-identical files.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            wall = repr(float(r.wall_ms)) if wall_clock else "nan"
            w.writerow([r.k, repr(float(r.tau)), repr(float(r.V)), repr(float(r.dV)),
                        repr(float(r.dgnorm2)), wall])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text, v0=None):
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = [LogRow(int(k), float(t), float(v), float(dv), float(g), float(w))
                for k, t, v, dv, g, w in reader]
        if v0 is None:
            v0 = rows[0].V - rows[0].dV if rows else math.nan
        return cls(v0=v0, rows=rows)


def dissipation_audit(log, slack=1e-10):
    """``(passed, first_bad_row)``: every ``dV_k <= slack * (1 + |V(u^{k-1})|)``."""
    prev = log.v0
    for row in log.rows:
        if row.dV > slack * (1.0 + abs(prev)) or row.V - prev > slack * (1.0 + abs(prev)):
            return False, row
        prev = row.V
    return True, None
