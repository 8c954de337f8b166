"""CSV ingestion, model persistence, and report emission.

Model files are line-oriented text with an explicit version. Floats are
written with 17 significant digits, which round-trips IEEE doubles
bit-exactly, so a saved model predicts identically after loading. Node
rows are ``feature threshold left right mu n_samples depth sse`` with
feature -1 marking leaves.
"""

from __future__ import annotations

import csv
import io as _stdio
from dataclasses import dataclass, field

import numpy as np

from .ensembles import Ensemble
from .trees import Dataset, RegressionTree

__all__ = ["ModelFile", "ModelFormatError", "load_csv", "save_model",
           "load_model", "emit_report", "report_rows", "REPORT_COLUMNS"]

FORMAT_VERSION = 1
MAGIC = "forestprune-model"

REPORT_COLUMNS = ["alpha", "trees_kept", "layers_kept", "nodes_kept",
                  "train_mse", "valid_mse", "passes"]


class ModelFormatError(ValueError):
    pass


@dataclass
class ModelFile:
    ensemble: Ensemble
    solution: tuple[np.ndarray, np.ndarray] | None = None  # (z, beta)
    provenance: dict[str, str] = field(default_factory=dict)
    version: int = FORMAT_VERSION


def load_csv(path: str, target: str, delimiter: str = ",") -> Dataset:
    """Read a numeric CSV with a header row into a Dataset.

    The target column becomes y; the remaining columns become X in file
    order. Errors name the offending column and 1-based data row.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise ValueError(f"{path}: target column {target!r} not found "
                             f"(columns: {', '.join(header)})")
        t_idx = header.index(target)
        rows = []
        for r, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise ValueError(f"{path}: row {r} has {len(rec)} cells, "
                                 f"expected {len(header)}")
            vals = []
            for j, cell in enumerate(rec):
                try:
                    v = float(cell)
                except ValueError:
                    v = np.nan
                if not np.isfinite(v):
                    raise ValueError(f"{path}: non-numeric cell at row {r}, "
                                     f"column {header[j]!r}: {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    mask = np.ones(len(header), dtype=bool)
    mask[t_idx] = False
    names = [h for h, keep in zip(header, mask) if keep]
    return Dataset(data[:, mask], data[:, t_idx], names)


def _f(x: float) -> str:
    return format(float(x), ".17g")


def _csv_line(fields: list[str]) -> str:
    buf = _stdio.StringIO()
    csv.writer(buf, lineterminator="").writerow(fields)
    return buf.getvalue()


def _csv_fields(line: str) -> list[str]:
    return next(csv.reader([line]))


def save_model(model: ModelFile | Ensemble, path: str) -> None:
    """Write a model (optionally with a prune solution) to a text file."""
    if isinstance(model, Ensemble):
        model = ModelFile(model)
    e = model.ensemble
    lines = [f"{MAGIC} {FORMAT_VERSION}",
             f"kind {e.kind}",
             f"gamma {_f(e.gamma)}",
             f"max_depth {e.d}",
             f"train_mean {_f(e.train_mean)}",
             f"n_features {e.p}",
             "feature_names " + _csv_line(list(e.feature_names)),
             "provenance " + _csv_line(
                 [f"{k}={v}" for k, v in sorted(model.provenance.items())]),
             f"n_trees {e.n}"]
    for ti, t in enumerate(e.trees):
        lines.append(f"tree {ti} {t.node_count}")
        for i in range(t.node_count):
            lines.append(" ".join([
                str(int(t.feature[i])), _f(t.threshold[i]),
                str(int(t.left[i])), str(int(t.right[i])),
                _f(t.mu[i]), str(int(t.n_samples[i])),
                str(int(t.depth[i])), _f(t.sse[i])]))
    if model.solution is not None:
        z, beta = model.solution
        lines.append("solution 1")
        lines.append("z " + " ".join(str(int(k)) for k in z))
        lines.append("beta " + " ".join(_f(b) for b in beta))
    else:
        lines.append("solution 0")
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError("truncated model file")
        line = self.lines[self.pos]
        self.pos += 1
        if expect is not None and not line.startswith(expect + " ") \
                and line != expect:
            raise ModelFormatError(f"expected {expect!r}, got {line!r}")
        return line


def load_model(path: str) -> ModelFile:
    """Parse a saved model; rejects unknown versions and malformed files."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    rd = _LineReader([ln for ln in lines if ln != ""])
    head = rd.next().split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    version = int(head[1])
    if version > FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format version {version} is newer than supported "
            f"({FORMAT_VERSION})")
    try:
        kind = rd.next("kind").split(" ", 1)[1]
        gamma = float(rd.next("gamma").split(" ", 1)[1])
        d = int(rd.next("max_depth").split(" ", 1)[1])
        train_mean = float(rd.next("train_mean").split(" ", 1)[1])
        p = int(rd.next("n_features").split(" ", 1)[1])
        names_line = rd.next("feature_names")
        names = _csv_fields(names_line.split(" ", 1)[1]) \
            if " " in names_line else []
        prov_line = rd.next("provenance")
        provenance = {}
        if " " in prov_line:
            for item in _csv_fields(prov_line.split(" ", 1)[1]):
                if "=" in item:
                    k, v = item.split("=", 1)
                    provenance[k] = v
        n_trees = int(rd.next("n_trees").split(" ", 1)[1])
        trees = []
        for ti in range(n_trees):
            hdr = rd.next("tree").split()
            if int(hdr[1]) != ti:
                raise ModelFormatError(f"tree index mismatch at {hdr}")
            cnt = int(hdr[2])
            cols = [[], [], [], [], [], [], [], []]
            for _ in range(cnt):
                parts = rd.next().split()
                if len(parts) != 8:
                    raise ModelFormatError(f"bad node row: {parts}")
                for c, v in zip(cols, parts):
                    c.append(v)
            trees.append(RegressionTree(
                np.array(cols[0], dtype=np.int64),
                np.array(cols[1], dtype=np.float64),
                np.array(cols[2], dtype=np.int64),
                np.array(cols[3], dtype=np.int64),
                np.array(cols[4], dtype=np.float64),
                np.array(cols[5], dtype=np.int64),
                np.array(cols[6], dtype=np.int64),
                np.array(cols[7], dtype=np.float64),
                n_features=p))
        sol_flag = int(rd.next("solution").split(" ", 1)[1])
        solution = None
        if sol_flag:
            z = np.array(rd.next("z").split()[1:], dtype=np.int64)
            beta = np.array(rd.next("beta").split()[1:], dtype=np.float64)
            if len(z) != n_trees or len(beta) != n_trees:
                raise ModelFormatError("solution length mismatch")
            solution = (z, beta)
        rd.next("end")
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: malformed model file: {exc}") from exc
    ensemble = Ensemble(trees, gamma, kind, d, train_mean, names)
    return ModelFile(ensemble, solution, provenance, version)


def report_rows(alphas, solutions, valid_mse=None, passes=None) -> list[dict]:
    """Assemble per-alpha report rows from path or single-solve results."""
    rows = []
    for i, (a, sol) in enumerate(zip(alphas, solutions)):
        rows.append({
            "alpha": float(a),
            "trees_kept": sol.metrics.get("trees_kept"),
            "layers_kept": sol.metrics.get("layers_kept"),
            "nodes_kept": sol.metrics.get("nodes_kept"),
            "train_mse": sol.metrics.get("train_mse"),
            "valid_mse": None if valid_mse is None else valid_mse[i],
            "passes": sol.passes if passes is None else passes[i],
        })
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return _f(v)
    return str(v)


def emit_report(rows: list[dict], path: str, fmt: str = "csv",
                columns: list[str] | None = None) -> None:
    """Write report rows as CSV or an aligned text table."""
    columns = columns or REPORT_COLUMNS
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(columns)
            for row in rows:
                wr.writerow([_cell(row.get(c)) for c in columns])
    elif fmt == "text":
        cells = [columns] + [[_cell(r.get(c)) for c in columns] for r in rows]
        widths = [max(len(row[j]) for row in cells) for j in range(len(columns))]
        with open(path, "w") as fh:
            for row in cells:
                fh.write("  ".join(c.rjust(w) for c, w in zip(row, widths)) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
