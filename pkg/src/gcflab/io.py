"""Files: body and config JSON, diagnostics CSV, snapshot plots, manifests.

Body files hold either sampled data or an analytic seed::

    {"n": 2, "kind": "support_grid", "resolution": [256], "values": [...]}
    {"kind": "ball", "radius": 1.0}
    {"kind": "ellipsoid", "semi_axes": [2, 1], "center": [0, 0]}
    {"kind": "perturbed_ball", "modes": [[3, 0.1]]}

Sampled values are stored row-major (colatitude, longitude on S^2). Seeds
need ``n`` and ``resolution``, given in the file or by the caller. Floats
are written with ``repr``, which round-trips doubles exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import platform
import tempfile
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import convex_body as cb
from . import flow_engine as fe
from . import sphere_grid as sg

DEFAULT_RESOLUTION = {2: [256], 3: [32, 64]}
GRID_KINDS = {"support_grid": cb.SupportField, "radial_grid": cb.RadialField}
SEED_KEYS = {
    "ball": {"radius", "center"},
    "ellipsoid": {"semi_axes", "center"},
    "perturbed_ball": {"modes", "radius"},
}
CONFIG_KEYS = {f.name for f in dataclasses.fields(fe.FlowConfig)} | {"scheme"}
CSV_COLUMNS = [
    "t",
    "volume",
    "min_s",
    "max_s",
    "min_K",
    "max_K",
    "gamma",
    "lambda",
    "chi_max",
    "roundness",
    "band_s_star_min",
    "band_s_star_max",
    "band_Kstar_max",
    "band_K_min",
]


class ConfigError(ValueError):
    """Malformed or invalid configuration or body file."""


def _fmt(x):
    return "%.17g" % x


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


# -- bodies -------------------------------------------------------------------------


def body_to_dict(body):
    grid = body.grid
    kind = "radial_grid" if isinstance(body, cb.RadialField) else "support_grid"
    out = {"n": int(grid.n), "kind": kind, "resolution": [int(m) for m in grid.shape]}
    if grid.scheme != sg.SCHEMES[grid.n][0]:
        out["scheme"] = grid.scheme
    out["values"] = body.values.reshape(-1).tolist()
    return out


def _resolution(spec, n, resolution):
    res = spec.get("resolution", resolution)
    if res is None:
        res = DEFAULT_RESOLUTION[n]
    return [int(v) for v in np.atleast_1d(res)]


def body_from_dict(spec, n=None, resolution=None, scheme=None):
    """Build a body from its dictionary form.

    ``n``, ``resolution`` and ``scheme`` fill in what a seed leaves out;
    values stored in the dictionary take precedence.
    """
    if not isinstance(spec, dict):
        raise ConfigError("body: expected a JSON object")
    kind = spec.get("kind")
    n = spec.get("n", n)
    if n is None:
        raise ConfigError("body: missing 'n'")
    if n not in sg.SCHEMES:
        raise ConfigError(f"body: unsupported dimension n={n}")
    scheme = spec.get("scheme", scheme)
    if kind in GRID_KINDS:
        unknown = set(spec) - {"n", "kind", "resolution", "scheme", "values"}
        if unknown:
            raise ConfigError(f"body: unknown key {sorted(unknown)[0]!r}")
        if "resolution" not in spec or "values" not in spec:
            raise ConfigError(f"body: {kind} needs 'resolution' and 'values'")
        grid = sg.make_grid(n, spec["resolution"], scheme)
        values = np.asarray(spec["values"], dtype=float)
        if values.size != grid.size:
            raise ConfigError(f"body: 'values' has {values.size} entries, grid has {grid.size}")
        return GRID_KINDS[kind](grid, values.reshape(grid.shape))
    if kind not in SEED_KEYS:
        raise ConfigError(f"body: unknown kind {kind!r}")
    unknown = set(spec) - SEED_KEYS[kind] - {"n", "kind", "resolution", "scheme"}
    if unknown:
        raise ConfigError(f"body: unknown key {sorted(unknown)[0]!r} for kind {kind!r}")
    grid = sg.make_grid(n, _resolution(spec, n, resolution), scheme)
    try:
        if kind == "ball":
            return cb.ball(grid, spec.get("radius", 1.0), spec.get("center"))
        if kind == "ellipsoid":
            if "semi_axes" not in spec:
                raise ConfigError("body: ellipsoid needs 'semi_axes'")
            return cb.ellipsoid(grid, spec["semi_axes"], spec.get("center"))
        if "modes" not in spec:
            raise ConfigError("body: perturbed_ball needs 'modes'")
        return cb.perturbed_ball(grid, spec["modes"], spec.get("radius", 1.0))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"body: {exc}") from exc


def save_body(path, body):
    atomic_write_text(path, json.dumps(body_to_dict(body)))


def load_body(path, n=None, resolution=None, scheme=None):
    return body_from_dict(_read_json(path), n, resolution, scheme)


# -- configuration ----------------------------------------------------------------


def config_from_dict(raw, base_dir="."):
    """Validated :class:`FlowConfig` from a parsed JSON object.

    ``initial`` may be a seed/body object or a path (relative to
    ``base_dir``) to a body file. A top-level ``scheme`` selects the
    differentiation scheme of the initial body's grid.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"config: unknown key {unknown[0]!r}")
    if "n" not in raw:
        raise ConfigError("config: missing required field 'n'")
    kwargs = dict(raw)
    scheme = kwargs.pop("scheme", None)
    n = kwargs["n"]
    if n not in sg.SCHEMES:
        raise ConfigError(f"n: unsupported dimension {n!r}")
    kwargs.setdefault("resolution", DEFAULT_RESOLUTION[n])
    initial = kwargs.get("initial")
    if isinstance(initial, str):
        kwargs["initial"] = _read_json(Path(base_dir) / initial)
    elif initial is not None and not isinstance(initial, dict):
        raise ConfigError("initial: expected a body object or a file path")
    if scheme is not None:
        kwargs["initial"] = dict(kwargs.get("initial") or {"kind": "ball"}, scheme=scheme)
    try:
        return fe.FlowConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path):
    """Read and validate a run configuration file; returns a FlowConfig."""
    return config_from_dict(_read_json(path), Path(path).parent)


def initial_body(config):
    """Support field of K_0 described by ``config.initial``."""
    return body_from_dict(config.initial, config.n, config.resolution)


def config_to_dict(config):
    return dataclasses.asdict(config)


# -- diagnostics and plots ------------------------------------------------------------


def diagnostics_rows(traj):
    """Diagnostics as rows of the CSV schema; band columns are NaN where
    the extinction estimate is unavailable or not after the snapshot."""
    n = traj.n
    T = traj.T_hat
    rows = []
    for d in traj.diagnostics:
        tau = T - d.t if T is not None else np.nan
        if not tau > 0:
            tau = np.nan
        rows.append(
            [
                d.t,
                d.volume,
                d.min_s,
                d.max_s,
                d.min_K,
                d.max_K,
                d.gamma,
                d.lam,
                d.chi_max,
                d.roundness,
                d.s_star_min * tau ** (1 / n),
                d.s_star_max * tau ** (1 / n),
                d.Kstar_max * tau ** (-(n - 1) / n),
                d.K_min * tau ** ((n - 1) / n),
            ]
        )
    return rows


def write_diagnostics_csv(path, traj):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in diagnostics_rows(traj):
            w.writerow([_fmt(v) for v in row])


def read_diagnostics_csv(path):
    """Columns of a diagnostics CSV as float arrays keyed by name."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    data = data.reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def support_of(kind, field):
    """Support field of the body K behind a stored flow field."""
    if kind == "dual":
        return cb.polar(field)
    if kind == "radial":
        return cb.support_from_radial(field)
    return field


def write_svg(path, body, size=400):
    """Closed polyline through the boundary points phi(u) of a planar body."""
    if body.n != 2:
        raise ValueError("SVG export is for planar bodies")
    pts = cb.boundary_points(body)
    extent = float(np.max(np.abs(pts))) * 1.1
    scale = size / (2 * extent)
    x = (pts[:, 0] + extent) * scale
    y = (extent - pts[:, 1]) * scale
    coords = " ".join(f"{a:.6f},{b:.6f}" for a, b in zip(x, y))
    text = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n'
        f'<polygon points="{coords}" fill="none" stroke="black" stroke-width="1"/>\n'
        "</svg>\n"
    )
    Path(path).write_text(text)


def write_direction_pairs(path, body):
    """CSV of node directions and support values, for external 3D plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "s"])
        nodes = body.grid.nodes.reshape(-1, body.n)
        for u, s in zip(nodes, body.values.reshape(-1)):
            w.writerow([_fmt(v) for v in (*u, s)])


# -- run output -----------------------------------------------------------------------


def versions():
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy"):
        try:
            out[pkg] = version(pkg)
        except PackageNotFoundError:
            out[pkg] = None
    return out


def write_manifest(path, manifest):
    atomic_write_text(path, json.dumps(manifest, indent=2) + "\n")


def write_run(outdir, traj):
    """Snapshots, diagnostics, plots and the manifest of a finished run.

    The manifest is written last, so every file it names exists.
    """
    out = Path(outdir)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for i, st in enumerate(traj.snapshots):
        name = f"snapshots/snap_{i:05d}.json"
        save_body(out / name, st.body)
        entry = {"index": i, "t": st.t, "step": st.step, "file": name}
        try:
            support = support_of(traj.kind, st.body)
        except cb.GeometryError:
            support = None
        if support is not None and traj.n == 2:
            entry["svg"] = f"snapshots/snap_{i:05d}.svg"
            write_svg(out / entry["svg"], support)
        elif support is not None:
            entry["pairs"] = f"snapshots/snap_{i:05d}.csv"
            write_direction_pairs(out / entry["pairs"], support)
        index.append(entry)
    write_diagnostics_csv(out / "diagnostics.csv", traj)
    manifest = {
        "config": config_to_dict(traj.config),
        "versions": versions(),
        "snapshots": index,
        "diagnostics": "diagnostics.csv",
        "termination": traj.termination,
        "message": traj.message,
        "T_hat": traj.T_hat,
        "T_uncertainty": traj.T_uncertainty,
        "snapshot_body": "polar" if traj.kind == "dual" else "primal",
        "snapshot_field": "radial" if traj.kind == "radial" else "support",
    }
    write_manifest(out / "manifest.json", manifest)
    return manifest


def read_manifest(path):
    return json.loads(Path(path).read_text())


__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "atomic_write_text",
    "body_from_dict",
    "body_to_dict",
    "config_from_dict",
    "diagnostics_rows",
    "initial_body",
    "load_body",
    "parse_config",
    "read_diagnostics_csv",
    "read_manifest",
    "save_body",
    "write_diagnostics_csv",
    "write_direction_pairs",
    "write_run",
    "write_svg",
]
