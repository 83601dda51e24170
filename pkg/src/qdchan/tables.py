"""Tabular file formats and scenario configuration.

All tables are comma-separated UTF-8 with a '#'-prefixed header block that
records units, the seed, and a hash of the generating config. Floats are
written with shortest round-trip formatting, so identical runs produce
byte-identical files and re-imports are lossless.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .channel import GenConfig
from .errors import DataError, SchemaError
from .geometry import SPEED_OF_LIGHT, DRay, Point3, Room

DRAY_COLUMNS = ("rx_index", "order", "delay_ns", "tau_ns", "pg_det_db",
                "aod_az", "aod_el", "aoa_az", "aoa_el", "materials")
MPC_COLUMNS = ("rx_index", "cluster_id", "kind", "tau_ns", "delay_abs_ns",
               "pg_db", "aod_az", "aod_el", "aoa_az", "aoa_el", "phase_rad")
_MPC_OPTIONAL = {"cluster_id", "kind", "phase_rad"}

_MPC_KINDS = {"direct", "cursor", "pre", "post"}


# ---------------------------------------------------------------------------
# Scenario configuration.

@dataclass
class ScenarioConfig:
    """One batch scenario: geometry, sweep positions, and generator knobs."""

    room: Room
    tx: Point3
    rx_list: list
    seed: int = 0
    gen: GenConfig = field(default_factory=GenConfig)
    material_library: str = "lecture_room"
    material_fallbacks: dict = field(default_factory=dict)
    dynamic_range_floor_db: float = -120.0
    drays_file: str = None

    def __post_init__(self):
        if not self.rx_list:
            raise SchemaError("rx: at least one receiver position is required")

    def canonical_dict(self):
        return {
            "room": {
                "dimensions": list(self.room.dimensions),
                "materials": {f.name.lower(): m
                              for f, m in sorted(self.room.surface_materials.items())},
            },
            "tx": list(self.tx),
            "rx": [list(p) for p in self.rx_list],
            "seed": self.seed,
            "model": self.gen.model,
            "max_order": self.gen.max_order,
            "n_pre": self.gen.n_pre,
            "n_post": self.gen.n_post,
            "prune_reference": self.gen.prune_reference,
            "carrier_frequency_hz": self.gen.carrier_frequency_hz,
            "force_nlos": self.gen.force_nlos,
            "mpc_cap": self.gen.mpc_cap,
            "dynamic_range_floor_db": self.dynamic_range_floor_db,
            "material_library": str(self.material_library),
            "material_fallbacks": dict(sorted(self.material_fallbacks.items())),
            "drays_file": str(self.drays_file) if self.drays_file else None,
        }

    def config_hash(self):
        payload = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _require(doc, key, where="config"):
    if key not in doc:
        raise SchemaError(f"{where}: missing required key {key!r}")
    return doc[key]


def _point(raw, where):
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise SchemaError(f"{where}: expected [x, y, z], got {raw!r}")
    try:
        return Point3(float(raw[0]), float(raw[1]), float(raw[2]))
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: coordinates must be numbers, got {raw!r}")


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise SchemaError("config: expected a mapping at the top level")
    room_doc = _require(doc, "room")
    dims = _require(room_doc, "dimensions", "config.room")
    mats = _require(room_doc, "materials", "config.room")
    try:
        room = Room(tuple(dims), dict(mats))
    except Exception as exc:
        raise SchemaError(f"config.room: {exc}")
    tx = _point(_require(doc, "tx"), "config.tx")
    rx_raw = _require(doc, "rx")
    if not isinstance(rx_raw, list) or not rx_raw:
        raise SchemaError("config.rx: expected a nonempty list of positions")
    rx_list = [_point(p, f"config.rx[{i}]") for i, p in enumerate(rx_raw)]
    try:
        gen = GenConfig(
            model=doc.get("model", "reduced"),
            max_order=int(doc.get("max_order", 2)),
            n_pre=int(doc.get("n_pre", 3)),
            n_post=int(doc.get("n_post", 16)),
            prune_reference=doc.get("prune_reference", "realized"),
            carrier_frequency_hz=float(doc.get("carrier_frequency_hz", 60e9)),
            force_nlos=bool(doc.get("force_nlos", False)),
            mpc_cap=int(doc.get("mpc_cap", 100_000)),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"config: {exc}")
    fallbacks = doc.get("material_fallbacks") or {}
    if not isinstance(fallbacks, dict):
        raise SchemaError("config.material_fallbacks: expected a mapping")
    return ScenarioConfig(
        room=room,
        tx=tx,
        rx_list=rx_list,
        seed=int(doc.get("seed", 0)),
        gen=gen,
        material_library=doc.get("material_library", "lecture_room"),
        material_fallbacks={str(k): str(v) for k, v in fallbacks.items()},
        dynamic_range_floor_db=float(doc.get("dynamic_range_floor_db", -120.0)),
        drays_file=doc.get("drays_file"),
    )


def load_scenario(path):
    """Parse a scenario config YAML file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"config is not valid YAML: {exc}")
    return scenario_from_dict(doc)


# ---------------------------------------------------------------------------
# Header block helpers.

def _format_header(kind, meta):
    lines = [f"# qdchan {kind} v1"]
    for key, value in meta.items():
        lines.append(f"# {key}={value}")
    return lines


def _split_header(lines):
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        stripped = line[1:].strip()
        if "=" in stripped:
            key, _, value = stripped.partition("=")
            meta[key.strip()] = value.strip()
        body_start = i + 1
    return meta, body_start


def _fmt(x):
    return repr(float(x))


# ---------------------------------------------------------------------------
# Deterministic-ray tables.

def write_dray_table(path, rays_by_rx, meta=None):
    """Write one row per ray per receiver index.

    `rays_by_rx` is an iterable of (rx_index, list-of-DRay).
    """
    lines = _format_header("dray-table", {
        "units": "delay_ns=ns tau_ns=ns pg_det_db=dB angles=deg",
        **(meta or {}),
    })
    lines.append(",".join(DRAY_COLUMNS))
    for rx_index, rays in rays_by_rx:
        for ray in rays:
            lines.append(",".join([
                str(rx_index), str(ray.order),
                _fmt(ray.delay_abs), _fmt(ray.tau), _fmt(ray.pg_det_db),
                _fmt(ray.aod_az), _fmt(ray.aod_el),
                _fmt(ray.aoa_az), _fmt(ray.aoa_el),
                ";".join(ray.materials),
            ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def ingest_drays(path):
    """Read and validate a deterministic-ray table.

    Returns (meta, list of (rx_index, DRay)). Material names are not checked
    against any library here; unknown names surface at generation time.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta, start = _split_header(lines)
    if start >= len(lines):
        raise DataError(f"{path}: no column header found")
    header = lines[start].split(",")
    if tuple(header) != DRAY_COLUMNS:
        raise DataError(
            f"{path}: line {start + 1}: expected columns {','.join(DRAY_COLUMNS)}")
    out = []
    for lineno, line in enumerate(lines[start + 1:], start=start + 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(DRAY_COLUMNS):
            raise DataError(f"{path}: line {lineno}: expected "
                            f"{len(DRAY_COLUMNS)} fields, got {len(parts)}")
        try:
            rx_index = int(parts[0])
            order = int(parts[1])
            delay, tau, pg = float(parts[2]), float(parts[3]), float(parts[4])
            aod_az, aod_el = float(parts[5]), float(parts[6])
            aoa_az, aoa_el = float(parts[7]), float(parts[8])
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}")
        materials = [m for m in parts[9].split(";") if m]
        if order < 0:
            raise DataError(f"{path}: line {lineno}: order must be >= 0")
        if order == 0 and (tau != 0.0 or materials):
            raise DataError(f"{path}: line {lineno}: a direct ray needs tau=0 "
                            "and no materials")
        if order >= 1 and tau <= 0.0:
            raise DataError(f"{path}: line {lineno}: reflected rays need tau > 0")
        if len(materials) != order:
            raise DataError(f"{path}: line {lineno}: expected {order} "
                            f"materials, got {len(materials)}")
        if not (0.0 <= aod_az < 360.0 and 0.0 <= aoa_az < 360.0):
            raise DataError(f"{path}: line {lineno}: azimuth out of [0, 360)")
        if not (0.0 <= aod_el <= 180.0 and 0.0 <= aoa_el <= 180.0):
            raise DataError(f"{path}: line {lineno}: elevation out of [0, 180]")
        ray = DRay(order=order, delay_abs=delay, tau=tau,
                   path_length=delay * 1e-9 * SPEED_OF_LIGHT,
                   pg_det_db=pg, aod_az=aod_az, aod_el=aod_el,
                   aoa_az=aoa_az, aoa_el=aoa_el, materials=materials)
        out.append((rx_index, ray))
    return meta, out


# ---------------------------------------------------------------------------
# Multipath-component tables.

def write_mpc_table(path, channels_by_rx, meta=None):
    """Write one row per component; `channels_by_rx` yields (rx_index, ChannelInstance)."""
    lines = _format_header("mpc-table", {
        "units": "tau_ns=ns delay_abs_ns=ns pg_db=dB angles=deg phase_rad=rad",
        **(meta or {}),
    })
    lines.append(",".join(MPC_COLUMNS))

    def row(rx_index, cluster_id, m, t_dir):
        return ",".join([
            str(rx_index), str(cluster_id), m.kind,
            _fmt(m.tau), _fmt(m.tau + t_dir), _fmt(m.pg_db),
            _fmt(m.aod_az), _fmt(m.aod_el), _fmt(m.aoa_az), _fmt(m.aoa_el),
            _fmt(m.phase),
        ])

    for rx_index, chan in channels_by_rx:
        if chan.direct is not None:
            lines.append(row(rx_index, -1, chan.direct, chan.t_dir))
        for cid, cluster in enumerate(chan.clusters):
            lines.append(row(rx_index, cid, cluster.cursor, chan.t_dir))
            for m in cluster.pre:
                lines.append(row(rx_index, cid, m, chan.t_dir))
            for m in cluster.post:
                lines.append(row(rx_index, cid, m, chan.t_dir))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class MpcTable:
    """Parsed component table; reference traces may omit optional columns."""

    meta: dict
    rx_index: np.ndarray
    cluster_id: np.ndarray
    kind: list
    tau_ns: np.ndarray
    delay_abs_ns: np.ndarray
    pg_db: np.ndarray
    aod_az: np.ndarray
    aod_el: np.ndarray
    aoa_az: np.ndarray
    aoa_el: np.ndarray
    phase_rad: np.ndarray

    def __len__(self):
        return self.pg_db.size

    def to_ensemble(self):
        """Per-channel (delay, gain) arrays, grouped by rx_index."""
        records = []
        for rx in np.unique(self.rx_index):
            mask = self.rx_index == rx
            records.append((self.delay_abs_ns[mask], self.pg_db[mask]))
        return records


def read_mpc_table(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta, start = _split_header(lines)
    if start >= len(lines):
        raise DataError(f"{path}: no column header found")
    header = tuple(lines[start].split(","))
    required = [c for c in MPC_COLUMNS if c not in _MPC_OPTIONAL]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: line {start + 1}: missing columns {missing}")
    unknown = [c for c in header if c not in MPC_COLUMNS]
    if unknown:
        raise DataError(f"{path}: line {start + 1}: unknown columns {unknown}")
    col = {name: header.index(name) for name in header}

    def get(parts, name, default, lineno, conv=float):
        if name not in col:
            return default
        try:
            return conv(parts[col[name]])
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: bad {name}: {exc}")

    rows = {name: [] for name in MPC_COLUMNS}
    for lineno, line in enumerate(lines[start + 1:], start=start + 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} "
                            f"fields, got {len(parts)}")
        kind = parts[col["kind"]] if "kind" in col else ""
        if kind and kind not in _MPC_KINDS:
            raise DataError(f"{path}: line {lineno}: unknown kind {kind!r}")
        rows["rx_index"].append(get(parts, "rx_index", 0, lineno, int))
        rows["cluster_id"].append(get(parts, "cluster_id", -1, lineno, int))
        rows["kind"].append(kind)
        rows["tau_ns"].append(get(parts, "tau_ns", float("nan"), lineno))
        rows["delay_abs_ns"].append(get(parts, "delay_abs_ns", float("nan"), lineno))
        rows["pg_db"].append(get(parts, "pg_db", float("nan"), lineno))
        rows["aod_az"].append(get(parts, "aod_az", float("nan"), lineno))
        rows["aod_el"].append(get(parts, "aod_el", float("nan"), lineno))
        rows["aoa_az"].append(get(parts, "aoa_az", float("nan"), lineno))
        rows["aoa_el"].append(get(parts, "aoa_el", float("nan"), lineno))
        rows["phase_rad"].append(get(parts, "phase_rad", 0.0, lineno))
    return MpcTable(
        meta=meta,
        rx_index=np.asarray(rows["rx_index"], dtype=np.int64),
        cluster_id=np.asarray(rows["cluster_id"], dtype=np.int64),
        kind=rows["kind"],
        tau_ns=np.asarray(rows["tau_ns"]),
        delay_abs_ns=np.asarray(rows["delay_abs_ns"]),
        pg_db=np.asarray(rows["pg_db"]),
        aod_az=np.asarray(rows["aod_az"]),
        aod_el=np.asarray(rows["aod_el"]),
        aoa_az=np.asarray(rows["aoa_az"]),
        aoa_el=np.asarray(rows["aoa_el"]),
        phase_rad=np.asarray(rows["phase_rad"]),
    )


# ---------------------------------------------------------------------------
# CDF breakpoint files and comparison reports.

def write_cdf_file(path, cdf, meta=None):
    lines = _format_header("cdf", meta or {})
    lines.append("value,cdf")
    n = cdf.n
    for i, v in enumerate(cdf.values):
        lines.append(f"{_fmt(v)},{_fmt((i + 1) / n)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_cdf_file(path):
    from .metrics import EmpiricalCdf

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    _meta, start = _split_header(lines)
    if start >= len(lines) or lines[start] != "value,cdf":
        raise DataError(f"{path}: expected a 'value,cdf' header")
    values = []
    for lineno, line in enumerate(lines[start + 1:], start=start + 2):
        if not line.strip():
            continue
        try:
            values.append(float(line.split(",")[0]))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}")
    return EmpiricalCdf(values)


def write_report(out_dir, report):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
