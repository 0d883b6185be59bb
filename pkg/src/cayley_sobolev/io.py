"""CSV/JSON serialisation and run manifests.

Numbers are written with 17 significant digits so files round-trip exactly
and identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cayley import CayleyBall, GrowthSequence


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _coord_names(prefix: str, d: int) -> list[str]:
    return [f"{prefix}{k}" for k in range(d)]


def ball_to_csv(ball: CayleyBall, path) -> Path:
    d = ball.elements.shape[1]
    rows = (
        [i, *ball.elements[i], ball.distance[i]] for i in range(len(ball))
    )
    return _write_rows(path, ["index", *_coord_names("x", d), "distance"], rows)


def ball_to_json(ball: CayleyBall, path) -> Path:
    return write_json(path, {
        "kind": ball.spec.kind, "dim": ball.spec.dim, "radius": ball.radius,
        "elements": ball.elements, "distance": ball.distance,
    })


def growth_to_csv(growth: GrowthSequence, path) -> Path:
    return _write_rows(path, ["n", "beta"], enumerate(growth.values))


def grid_function_to_csv(ball: CayleyBall, values: np.ndarray, path, name: str = "value") -> Path:
    d = ball.elements.shape[1]
    rows = ([*ball.elements[i], values[i]] for i in range(len(ball)))
    return _write_rows(path, [*_coord_names("x", d), name], rows)


def grid_functions_to_csv(ball: CayleyBall, columns: dict, path) -> Path:
    d = ball.elements.shape[1]
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    rows = ([*ball.elements[i], *(c[i] for c in cols)] for i in range(len(ball)))
    return _write_rows(path, [*_coord_names("x", d), *names], rows)


def read_grid_function(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1].astype(np.int64), data[:, -1]


def grid_function_to_json(ball: CayleyBall, values: np.ndarray, path) -> Path:
    return write_json(path, {"coordinates": ball.elements, "values": np.asarray(values)})


def edge_function_to_csv(alpha, path) -> Path:
    ball = alpha.ball
    d = ball.elements.shape[1]
    e = alpha.edges
    rows = ([*ball.elements[a], *ball.elements[b], v] for (a, b), v in zip(e, alpha.values))
    return _write_rows(path, [*_coord_names("from", d), *_coord_names("to", d), "value"], rows)


def decay_table_to_csv(table, path) -> Path:
    return _write_rows(path, ["R", "loglog_ratio", "norm", "kind"],
                       ([R, x, v, k] for R, x, v, k in table.rows()))


def two_column(path, x, y) -> Path:
    """Plain whitespace-separated data for plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for a, b in zip(x, y):
            fh.write(f"{_fmt(a)} {_fmt(b)}\n")
    return path


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None
    status: str = "running"
    exit_code: int | None = None
    outputs: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    message: str = ""

    def add(self, path) -> Path:
        self.outputs.append(str(path))
        return Path(path)

    def finish(self, status: str, code: int, message: str = "") -> None:
        self.status, self.exit_code, self.message = status, code, message
        self.finished = datetime.now(timezone.utc).isoformat()

    def write(self, path) -> Path:
        from . import __version__
        import scipy

        doc = {
            "command": self.command, "config": self.config, "seed": self.seed,
            "started": self.started, "finished": self.finished, "status": self.status,
            "exit_code": self.exit_code, "outputs": self.outputs, "metrics": self.metrics,
            "message": self.message,
            "versions": {"package": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "argv": sys.argv[1:],
        }
        return write_json(path, doc)
