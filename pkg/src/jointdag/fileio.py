"""File formats: the JDAG-SCORES table, estimate/truth JSON, DOT export,
CSV series, discrete-data matrices, and the run manifest.

Scores are written with ``repr`` so a save/load cycle is bit-exact.  Lines
beginning with ``#`` are comments everywhere; writers use a trailing comment
to tie each output file to its run-manifest digest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graphs import Dag, DagCollection, UnitNetwork
from .scores import DiscreteDataset, LocalScoreTable

__all__ = [
    "SCORES_MAGIC",
    "FormatError",
    "Solution",
    "EstimateFile",
    "RunManifest",
    "scores_to_text",
    "scores_from_text",
    "save_scores",
    "load_scores",
    "solution_to_dict",
    "save_estimate",
    "load_estimate",
    "save_truth",
    "load_truth",
    "to_dot",
    "save_diagnostics_csv",
    "save_metrics_csv",
    "save_grid_csv",
    "load_dataset",
    "save_dataset",
    "make_manifest",
    "save_manifest",
]

SCORES_MAGIC = "JDAG-SCORES v1"


class FormatError(ValueError):
    """Malformed input file."""


# ---------------------------------------------------------------------------
# local score tables


def scores_to_text(table: LocalScoreTable, manifest_digest: str | None = None) -> str:
    lines = [SCORES_MAGIC, f"K {table.k} P {table.p} DMAX {table.d_max}"]
    for unit in range(1, table.k + 1):
        lines.append(f"unit {unit}")
        for child in range(1, table.p + 1):
            per_child = table.parent_sets(unit, child)
            lines.append(f"var {child} {len(per_child)}")
            for pi, score in per_child.items():
                parents = " ".join(str(j) for j in sorted(pi))
                suffix = f" {len(pi)}" + (f" {parents}" if parents else "")
                lines.append(f"{score!r}{suffix}")
    if manifest_digest:
        lines.append(f"# manifest {manifest_digest}")
    return "\n".join(lines) + "\n"


def scores_from_text(text: str) -> LocalScoreTable:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != SCORES_MAGIC:
        raise FormatError(f"expected header {SCORES_MAGIC!r}")
    head = lines[1].split()
    if len(head) != 6 or head[0] != "K" or head[2] != "P" or head[4] != "DMAX":
        raise FormatError(f"bad dimension line {lines[1]!r}")
    k, p, d_max = int(head[1]), int(head[3]), int(head[5])
    pos = 2
    entries: dict[tuple[int, int], dict[frozenset[int], float]] = {}
    for unit in range(1, k + 1):
        if pos >= len(lines) or lines[pos] != f"unit {unit}":
            raise FormatError(f"expected 'unit {unit}' at line {pos + 1}")
        pos += 1
        for _ in range(p):
            parts = lines[pos].split()
            if len(parts) != 3 or parts[0] != "var":
                raise FormatError(f"expected 'var <i> <nsets>' at line {pos + 1}")
            child, nsets = int(parts[1]), int(parts[2])
            pos += 1
            per_child: dict[frozenset[int], float] = {}
            for _ in range(nsets):
                toks = lines[pos].split()
                pos += 1
                score = float(toks[0])
                m = int(toks[1])
                if len(toks) != 2 + m:
                    raise FormatError(f"entry line {pos} lists {len(toks) - 2} parents, declared {m}")
                pi = frozenset(int(t) for t in toks[2:])
                if len(pi) != m:
                    raise FormatError(f"duplicate parents on line {pos}")
                per_child[pi] = score
            entries[(unit, child)] = per_child
    if pos != len(lines):
        raise FormatError(f"trailing content from line {pos + 1}")
    return LocalScoreTable(k, p, d_max, entries)


def save_scores(table: LocalScoreTable, path, manifest_digest: str | None = None) -> None:
    Path(path).write_text(scores_to_text(table, manifest_digest))


def load_scores(path) -> LocalScoreTable:
    return scores_from_text(Path(path).read_text())


# ---------------------------------------------------------------------------
# estimate / truth JSON


@dataclass(frozen=True)
class Solution:
    dags: DagCollection
    network: UnitNetwork | None
    objective: float | None = None
    dual_bound: float | None = None
    status: str | None = None


@dataclass(frozen=True)
class EstimateFile:
    p: int
    k: int
    solutions: tuple[Solution, ...]

    @property
    def best(self) -> Solution:
        return self.solutions[0]


def _num_or_none(x: float | None):
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def solution_to_dict(sol: Solution) -> dict:
    units = []
    for unit in range(1, sol.dags.k + 1):
        g = sol.dags.dag(unit)
        parents = {
            str(i): sorted(g.parents_of(i)) for i in range(1, g.p + 1) if g.parents_of(i)
        }
        units.append({"id": unit, "parents": parents})
    out: dict = {"units": units}
    if sol.network is not None:
        out["network"] = [list(e) for e in sol.network.edge_list()]
    if sol.objective is not None:
        out["objective"] = _num_or_none(sol.objective)
    if sol.dual_bound is not None:
        out["dual_bound"] = _num_or_none(sol.dual_bound)
    if sol.status is not None:
        out["status"] = sol.status
    return out


def _solution_from_dict(d: dict, p: int, k: int) -> Solution:
    dags = []
    by_id = {u["id"]: u for u in d["units"]}
    for unit in range(1, k + 1):
        if unit not in by_id:
            raise FormatError(f"missing unit {unit}")
        parents = {
            int(child): [int(j) for j in js]
            for child, js in by_id[unit].get("parents", {}).items()
        }
        dags.append(Dag.from_parents(p, parents))
    network = None
    if d.get("network") is not None:
        network = UnitNetwork.from_pairs(k, [tuple(e) for e in d["network"]])
    return Solution(
        DagCollection(tuple(dags)),
        network,
        d.get("objective"),
        d.get("dual_bound"),
        d.get("status"),
    )


def save_estimate(path, p: int, k: int, solutions: Sequence[Solution], manifest_digest: str | None = None) -> None:
    if not solutions:
        raise ValueError("need at least one solution")
    doc: dict = {"p": p, "k": k}
    if len(solutions) == 1:
        doc.update(solution_to_dict(solutions[0]))
    else:
        doc["solutions"] = [solution_to_dict(s) for s in solutions]
    if manifest_digest:
        doc["manifest"] = manifest_digest
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_estimate(path) -> EstimateFile:
    doc = json.loads(Path(path).read_text())
    p, k = int(doc["p"]), int(doc["k"])
    if "solutions" in doc:
        sols = tuple(_solution_from_dict(d, p, k) for d in doc["solutions"])
    else:
        sols = (_solution_from_dict(doc, p, k),)
    return EstimateFile(p, k, sols)


def save_truth(path, gs: DagCollection, network: UnitNetwork, manifest_digest: str | None = None) -> None:
    save_estimate(path, gs.p, gs.k, [Solution(gs, network)], manifest_digest)


def load_truth(path) -> tuple[DagCollection, UnitNetwork]:
    est = load_estimate(path)
    sol = est.best
    if sol.network is None:
        raise FormatError("truth file lacks a unit network")
    return sol.dags, sol.network


# ---------------------------------------------------------------------------
# DOT export


def to_dot(gs: DagCollection, network: UnitNetwork | None = None, manifest_digest: str | None = None) -> str:
    out = []
    if manifest_digest:
        out.append(f"// manifest {manifest_digest}")
    for unit in range(1, gs.k + 1):
        g = gs.dag(unit)
        out.append(f"digraph unit{unit} {{")
        for i in range(1, g.p + 1):
            out.append(f"  v{i};")
        for j, i in g.edges():
            out.append(f"  v{j} -> v{i};")
        out.append("}")
    if network is not None:
        out.append("graph network {")
        for u in range(1, network.k + 1):
            out.append(f"  u{u};")
        for a, b in network.edge_list():
            out.append(f"  u{a} -- u{b};")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# CSV series


def _write_csv(path, header: list[str], rows: Iterable[Sequence], manifest_digest: str | None) -> None:
    with open(path, "w", newline="") as fh:
        if manifest_digest:
            fh.write(f"# manifest {manifest_digest}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def save_diagnostics_csv(path, diag, manifest_digest: str | None = None) -> None:
    """Long-format series: sampler SHD trace, ACF, and the acceptance rate."""
    rows: list[tuple] = [("shd", i, int(v)) for i, v in enumerate(diag.shd_trace)]
    rows += [("acf", lag, repr(float(v))) for lag, v in enumerate(diag.acf)]
    rows.append(("acceptance_rate", 0, repr(float(diag.acceptance_rate))))
    _write_csv(path, ["series", "index", "value"], rows, manifest_digest)


def save_metrics_csv(path, metrics: dict[str, object], manifest_digest: str | None = None) -> None:
    header = list(metrics)
    row = ["" if v is None else (repr(v) if isinstance(v, float) else v) for v in metrics.values()]
    _write_csv(path, header, [row], manifest_digest)


def save_grid_csv(path, cells, manifest_digest: str | None = None) -> None:
    def fmt(v):
        return "" if v is None else repr(float(v))

    rows = [
        (fmt(c.lam), fmt(c.eta), fmt(c.objective), fmt(c.aic), c.status, repr(round(c.wall_time, 6)))
        for c in cells
    ]
    _write_csv(path, ["lambda", "eta", "objective", "aic", "status", "wall_time"], rows, manifest_digest)


# ---------------------------------------------------------------------------
# discrete data matrices


def load_dataset(path) -> DiscreteDataset:
    """Comma-separated integer matrix with a one-line header of arities."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty dataset file")
    arity = tuple(int(t) for t in lines[0].split(","))
    rows = [[int(t) for t in ln.split(",")] for ln in lines[1:]]
    values = np.array(rows, dtype=np.int64) if rows else np.zeros((0, len(arity)), dtype=np.int64)
    return DiscreteDataset(arity, values)


def save_dataset(data: DiscreteDataset, path) -> None:
    lines = [",".join(str(r) for r in data.arity)]
    lines += [",".join(str(v) for v in row) for row in data.values]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run manifest


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record; the digest covers everything except the clock.

    Output files embed the digest, so identical configurations yield
    byte-identical data files even though ``created`` differs run to run.
    """

    command: str
    config: dict
    seed: int | None
    version: str
    inputs: dict[str, str] = field(default_factory=dict)
    created: str = ""

    @property
    def digest(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
        }
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def make_manifest(command: str, config: dict, seed: int | None, inputs: dict[str, str] | None = None) -> RunManifest:
    from . import __version__

    digests = {name: _sha256_file(p) for name, p in (inputs or {}).items()}
    return RunManifest(
        command=command,
        config=config,
        seed=seed,
        version=__version__,
        inputs=digests,
        created=datetime.now(timezone.utc).isoformat(),
    )


def save_manifest(manifest: RunManifest, path) -> None:
    doc = {
        "digest": manifest.digest,
        "command": manifest.command,
        "config": manifest.config,
        "seed": manifest.seed,
        "version": manifest.version,
        "inputs": manifest.inputs,
        "created": manifest.created,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
