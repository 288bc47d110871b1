"""Snapshot, trace and checkpoint files.

* legacy ASCII VTK unstructured grids: every mesh node as a point, only
  active triangles as cells, nodal damage ``alpha`` and displacement ``u``;
* a CSV energy trace with one row per step (:data:`TRACE_HEADER`);
* ``.npz`` checkpoints holding the state needed to resume at the next step.

Numbers are written with 17 significant digits, so output bytes are a pure
function of the data.
"""

from __future__ import annotations

import csv
import os

import numpy as np

TRACE_HEADER = (
    "t_i",
    "am_iterations",
    "elastic",
    "local_dissipation",
    "gradient_dissipation",
    "external_work",
    "total",
    "max_alpha",
    "damaged_area_fraction",
)

VTK_TRIANGLE = 5


def _num(x) -> str:
    return f"{float(x):.17g}"


def _open(path, mode):
    try:
        return open(path, mode, encoding="ascii", newline="")
    except OSError as exc:
        raise OSError(f"cannot open {path}: {exc.strerror}") from exc


def write_vtk(mesh, fields: dict, path, title: str = "cavedamage"):
    """Write a legacy ASCII unstructured grid.

    ``fields`` maps names to nodal arrays: shape ``(n_nodes,)`` for scalars,
    ``(2 n_nodes,)`` interleaved or ``(n_nodes, 2)`` for 2D vectors (written
    with a zero third component).
    """
    n = mesh.n_nodes
    cells = mesh.tris[mesh.active]
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {n} double")
    lines += [f"{_num(x)} {_num(y)} 0" for x, y in mesh.nodes]
    lines.append(f"CELLS {len(cells)} {4 * len(cells)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(VTK_TRIANGLE)] * len(cells)
    if fields:
        lines.append(f"POINT_DATA {n}")
    for name, values in fields.items():
        v = np.asarray(values, dtype=float)
        if v.shape == (n,):
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [_num(a) for a in v]
        elif v.size == 2 * n:
            v = v.reshape(n, 2)
            lines.append(f"VECTORS {name} double")
            lines += [f"{_num(a)} {_num(b)} 0" for a, b in v]
        else:
            raise ValueError(f"field {name!r} has shape {v.shape}, expected nodal values for {n} nodes")
    with _open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path) -> dict:
    """Read back a file written by :func:`write_vtk`.

    Returns ``points (n, 3)``, ``cells (m, 3)``, ``cell_types (m,)`` and
    ``point_data`` (name -> array). Declared sizes are checked against the
    data actually present.
    """
    with _open(path, "r") as fh:
        tokens = fh.read().split("\n")
    if not tokens[0].startswith("# vtk DataFile Version"):
        raise ValueError(f"{path}: not a legacy VTK file")
    if tokens[2].strip() != "ASCII" or tokens[3].strip() != "DATASET UNSTRUCTURED_GRID":
        raise ValueError(f"{path}: expected an ASCII unstructured grid")
    words = " ".join(tokens[4:]).split()
    pos = 0

    def take(k):
        nonlocal pos
        if pos + k > len(words):
            raise ValueError(f"{path}: truncated data")
        out = words[pos:pos + k]
        pos += k
        return out

    out = {"point_data": {}}
    n = m = None
    while pos < len(words):
        key = take(1)[0]
        if key == "POINTS":
            n, _ = int(take(1)[0]), take(1)
            out["points"] = np.array(take(3 * n), dtype=float).reshape(n, 3)
        elif key == "CELLS":
            m, size = int(take(1)[0]), int(take(1)[0])
            raw = np.array(take(size), dtype=np.int64)
            if size != 4 * m or np.any(raw[0::4] != 3):
                raise ValueError(f"{path}: only triangle cells are supported")
            out["cells"] = raw.reshape(m, 4)[:, 1:]
        elif key == "CELL_TYPES":
            k = int(take(1)[0])
            if k != m:
                raise ValueError(f"{path}: {k} cell types for {m} cells")
            out["cell_types"] = np.array(take(k), dtype=np.int64)
        elif key == "POINT_DATA":
            if int(take(1)[0]) != n:
                raise ValueError(f"{path}: point data size differs from point count")
        elif key == "SCALARS":
            name, _, comps = take(3)
            if take(2)[0] != "LOOKUP_TABLE":
                raise ValueError(f"{path}: missing lookup table for {name}")
            out["point_data"][name] = np.array(take(n * int(comps)), dtype=float)
        elif key == "VECTORS":
            name, _ = take(2)
            out["point_data"][name] = np.array(take(3 * n), dtype=float).reshape(n, 3)
        else:
            raise ValueError(f"{path}: unexpected section {key!r}")
    return out


def trace_row(record) -> list:
    e = record.energy
    return [
        record.t,
        record.am.iterations,
        e.elastic,
        e.local_dissipation,
        e.gradient_dissipation,
        e.external_work,
        e.total,
        record.max_damage(),
        record.damaged_area_fraction(),
    ]


def _fmt_row(row):
    return [str(v) if isinstance(v, (int, np.integer)) else f"{float(v):.17e}" for v in row]


def write_trace_csv(trajectory, path):
    """Write one row per step; see :data:`TRACE_HEADER` for the columns."""
    trajectory = list(trajectory)
    if not trajectory:
        raise ValueError("empty trajectory")
    with _open(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for rec in trajectory:
            w.writerow(_fmt_row(trace_row(rec)))


class TraceWriter:
    """Append trace rows as steps complete, so partial runs leave a valid file."""

    def __init__(self, path):
        self.path = path
        with _open(path, "w") as fh:
            csv.writer(fh, lineterminator="\n").writerow(TRACE_HEADER)

    def append(self, record):
        with _open(self.path, "a") as fh:
            csv.writer(fh, lineterminator="\n").writerow(_fmt_row(trace_row(record)))


def read_trace_csv(path) -> dict:
    """Columns of a trace file as arrays keyed by header name."""
    with _open(path, "r") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise ValueError(f"{path}: unexpected header")
    data = np.array(rows[1:], dtype=float).reshape(-1, len(TRACE_HEADER))
    return {name: data[:, i] for i, name in enumerate(TRACE_HEADER)}


def snapshot_path(out_dir, t: int) -> str:
    return os.path.join(out_dir, f"step_{t:03d}.vtk")


def checkpoint_path(out_dir, t: int) -> str:
    return os.path.join(out_dir, f"checkpoint_{t:03d}.npz")


def write_state(state, out_dir):
    """Snapshot and checkpoint of one step."""
    write_vtk(state.mesh, {"alpha": state.alpha, "u": state.u}, snapshot_path(out_dir, state.t),
              f"step {state.t}")
    save_checkpoint(state, checkpoint_path(out_dir, state.t))


def save_checkpoint(state, path):
    try:
        with open(path, "wb") as fh:
            np.savez(fh, t=state.t, u=state.u, alpha=state.alpha, alpha_prev=state.alpha_prev,
                     active=state.mesh.active)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def load_checkpoint(path, mesh):
    """Rebuild a :class:`~cavedamage.evolution.State` on ``mesh`` (the uncarved mesh of the run)."""
    from .evolution import State
    from .mesh import Mesh, tag_boundaries

    with np.load(path) as data:
        t = int(data["t"])
        active = data["active"]
        if active.shape != (mesh.n_elems,) or len(data["alpha"]) != mesh.n_nodes:
            raise ValueError(f"{path}: checkpoint does not match the configured mesh")
        carved = tag_boundaries(Mesh(mesh.geometry, active.astype(bool)))
        return State(t, data["u"].copy(), data["alpha"].copy(), data["alpha_prev"].copy(), carved)
