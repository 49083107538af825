"""Dataset and query file formats.

Dataset files are line-oriented text.  The header line is ``d s n k``
(dimension, maximum polynomial degree, point count, default k).  Each of the
following n records is ``id c10 c11 ... ; c20 ... ; ...``: the point id, then
one coefficient group per coordinate (constant term first), groups separated
by ``;``.  Query files hold one query per line: ``t x1 ... xd k``.

Floats are written with ``repr`` so a generated file re-reads to identical
values, field for field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .trajectories import Trajectory


@dataclass(frozen=True)
class Dataset:
    dimension: int
    degree: int
    default_k: int
    trajectories: tuple[Trajectory, ...]

    @property
    def n(self) -> int:
        return len(self.trajectories)

    @property
    def is_static(self) -> bool:
        return all(tr.degree == 0 for tr in self.trajectories)


@dataclass(frozen=True)
class Query:
    time: float
    point: np.ndarray
    k: int


def parse_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    header = None
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = (lineno, line)
        else:
            records.append((lineno, line))
    if header is None:
        raise ParseError("empty dataset file")
    lineno, line = header
    parts = line.split()
    if len(parts) != 4:
        raise ParseError("header must be 'd s n k'", lineno)
    try:
        d, s, n, k = (int(p) for p in parts)
    except ValueError:
        raise ParseError("header fields must be integers", lineno) from None
    if d < 2:
        raise ParseError("dimension must be >= 2", lineno)
    if s < 0:
        raise ParseError("degree must be >= 0", lineno)
    if len(records) != n:
        raise ParseError(f"header promises {n} records, found {len(records)}")
    trajectories = []
    seen = set()
    for lineno, line in records:
        tokens = line.split(None, 1)
        if len(tokens) != 2:
            raise ParseError("record needs an id and coefficient groups", lineno)
        try:
            pid = int(tokens[0])
        except ValueError:
            raise ParseError(f"bad point id {tokens[0]!r}", lineno) from None
        if pid in seen:
            raise ParseError(f"duplicate point id {pid}", lineno)
        seen.add(pid)
        groups = tokens[1].split(";")
        if len(groups) != d:
            raise ParseError(
                f"record {pid}: expected {d} coefficient groups, found {len(groups)}", lineno
            )
        coeffs = []
        for gi, group in enumerate(groups):
            try:
                row = [float(tok) for tok in group.split()]
            except ValueError:
                raise ParseError(
                    f"record {pid}: bad coefficient in group {gi}", lineno
                ) from None
            if not row:
                raise ParseError(f"record {pid}: empty coefficient group {gi}", lineno)
            if len(row) > s + 1:
                raise ParseError(
                    f"record {pid}: degree {len(row) - 1} exceeds header degree {s}", lineno
                )
            coeffs.append(row)
        trajectories.append(Trajectory.make(pid, coeffs))
    ids = sorted(tr.point_id for tr in trajectories)
    if ids != list(range(n)):
        raise ParseError("point ids must be contiguous integers starting at 0")
    if not 1 <= k <= max(1, n - 1):
        raise ParseError(f"default k={k} out of range for n={n}")
    trajectories.sort(key=lambda tr: tr.point_id)
    return Dataset(dimension=d, degree=s, default_k=k, trajectories=tuple(trajectories))


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh.read())


def format_dataset(ds: Dataset) -> str:
    out = [f"{ds.dimension} {ds.degree} {ds.n} {ds.default_k}"]
    for tr in ds.trajectories:
        groups = " ; ".join(" ".join(repr(c) for c in row) for row in tr.coeffs)
        out.append(f"{tr.point_id} {groups}")
    return "\n".join(out) + "\n"


def write_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_dataset(ds))


def generate_dataset(n: int, d: int, s: int, seed: int, k: int | None = None) -> Dataset:
    """Reproducible random dataset: coefficients uniform in [-1, 1]."""
    rng = np.random.default_rng(seed)
    if k is None:
        k = max(1, min(3, n - 1))
    trajectories = tuple(
        Trajectory.make(i, rng.uniform(-1.0, 1.0, size=(d, s + 1))) for i in range(n)
    )
    return Dataset(dimension=d, degree=s, default_k=k, trajectories=trajectories)


def parse_queries(text: str, dimension: int) -> list[Query]:
    queries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != dimension + 2:
            raise ParseError(
                f"query needs t, {dimension} coordinates and k "
                f"({dimension + 2} fields), found {len(parts)}", lineno
            )
        try:
            t = float(parts[0])
            coords = [float(p) for p in parts[1 : 1 + dimension]]
            k = int(parts[-1])
        except ValueError:
            raise ParseError("bad query field", lineno) from None
        if k < 1:
            raise ParseError(f"query k must be >= 1, got {k}", lineno)
        queries.append(Query(time=t, point=np.array(coords), k=k))
    return queries


def load_queries(path, dimension: int) -> list[Query]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_queries(fh.read(), dimension)
