"""Time loop shared by all steppers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from ..domain import Field

Monitor = Callable[[Field], float]


@dataclass
class Trajectory:
    """Snapshots at output times plus scalar monitor series.

    ``fields[0]`` is the initial state; ``series[name]`` is a list of
    ``(time, value)`` pairs recorded at every snapshot.
    """

    fields: list[Field] = field(default_factory=list)
    series: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    steps: int = 0
    newton_iters: int = 0
    clipped_mass: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.fields])

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def at(self, t: float) -> Field:
        """Snapshot closest to ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        return self.fields[i]

    def series_arrays(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        pts = self.series[name]
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])

    def __iter__(self):
        return iter(self.fields)

    def __len__(self) -> int:
        return len(self.fields)


def output_schedule(t0: float, t_end: float, outputs: Iterable[float]) -> list[float]:
    """Sorted output times in ``(t0, t_end]``; ``t_end`` is always included."""
    out = sorted({float(t) for t in outputs if t0 < t <= t_end})
    if not out or out[-1] < t_end:
        out.append(float(t_end))
    return out


def evolve(
    u0: Field,
    t_end: float,
    h: float,
    step: Callable[[Field, float], tuple[Field, object]],
    outputs: Iterable[float] = (),
    monitors: Mapping[str, Monitor] | None = None,
    record_every: int = 0,
) -> Trajectory:
    """Advance ``u0`` to ``t_end`` with fixed step ``h``.

    Steps are shortened only to land exactly on output times.  ``step``
    returns ``(field, info)``; infos with ``newton_iters``/``clipped`` fields
    are accumulated.  With ``record_every = k > 0`` monitors are also sampled
    every ``k`` steps (without storing the field).
    """
    if t_end < u0.time:
        raise ValueError("t_end precedes the initial time")
    monitors = dict(monitors or {})
    traj = Trajectory(fields=[u0], series={k: [] for k in monitors})

    def record(f: Field) -> None:
        for name, fn in monitors.items():
            pts = traj.series[name]
            if pts and pts[-1][0] >= f.time:
                continue
            pts.append((f.time, float(fn(f))))

    record(u0)
    u = u0
    for t_out in output_schedule(u0.time, t_end, outputs):
        while u.time < t_out - 1e-12 * max(1.0, abs(t_out)):
            hh = min(h, t_out - u.time)
            u, info = step(u, hh)
            traj.steps += 1
            traj.newton_iters += int(getattr(info, "newton_iters", 0) or 0)
            traj.clipped_mass += float(getattr(info, "clipped", 0.0) or 0.0)
            if record_every and traj.steps % record_every == 0:
                record(u)
        u = Field(u.grid, u.values, t_out)
        traj.fields.append(u)
        record(u)
    return traj
