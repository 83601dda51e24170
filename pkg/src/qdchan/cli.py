"""Batch command-line front-end.

Subcommands: `trace` (deterministic rays only), `generate` (full stochastic
channels), `compare` (KS report between two component tables), `validate`
(re-read a generated table and check its invariants). Exit codes: 0 success,
2 configuration error, 3 data error.
"""

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import _backend
from .channel import generate_channel
from .distributions import RngStream
from .errors import (
    DataError,
    GeometryError,
    MaterialLookupError,
    ParameterError,
    ResourceLimitError,
    SchemaError,
)
from .geometry import trace
from .materials import load_named_library
from .metrics import compare_ensembles
from .tables import (
    ingest_drays,
    load_scenario,
    read_mpc_table,
    write_cdf_file,
    write_dray_table,
    write_mpc_table,
    write_report,
)


def _load_config(args):
    config = load_scenario(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _library_for(config):
    library = load_named_library(config.material_library,
                                 config.material_fallbacks)
    for face, name in sorted(config.room.surface_materials.items()):
        try:
            library.resolve(name)
        except MaterialLookupError:
            raise SchemaError(
                f"config.room.materials.{face.name.lower()}: unknown material {name!r}")
    return library


def _table_meta(config):
    return {
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "model": config.gen.model,
        "max_order": config.gen.max_order,
        "n_pre": config.gen.n_pre,
        "n_post": config.gen.n_post,
        "prune_reference": config.gen.prune_reference,
    }


def run_trace(config, out_path):
    """Trace deterministic rays for every receiver and write the table."""
    library = _library_for(config)
    rays_by_rx = []
    for i, rx in enumerate(config.rx_list):
        rays = trace(config.room, config.tx, rx, config.gen.max_order,
                     lambda_c=config.gen.wavelength_m, library=library)
        rays_by_rx.append((i, rays))
    write_dray_table(out_path, rays_by_rx, _table_meta(config))
    return out_path


def _ingested_by_rx(config):
    if not config.drays_file:
        return None
    _meta, rows = ingest_drays(config.drays_file)
    grouped = {}
    for rx_index, ray in rows:
        if rx_index < 0 or rx_index >= len(config.rx_list):
            raise DataError(
                f"{config.drays_file}: rx_index {rx_index} outside the "
                f"configured sweep of {len(config.rx_list)} positions")
        grouped.setdefault(rx_index, []).append(ray)
    return grouped


def generate_channels(config, library=None, jobs=1):
    """All channel instances for a scenario, as a list of (rx_index, channel).

    Receiver positions are independent streams derived from (seed, rx_index),
    so results do not depend on worker count or completion order.
    """
    if library is None:
        library = _library_for(config)
    ingested = _ingested_by_rx(config)

    def one(i):
        drays = None
        if ingested is not None:
            drays = ingested.get(i)
            if drays is None:
                return None
        rng = RngStream(config.seed, (i,))
        return generate_channel(config.room, config.tx, config.rx_list[i],
                                library, config.gen, rng, drays=drays)

    indices = range(len(config.rx_list))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, indices))
    else:
        results = [one(i) for i in indices]
    return [(i, chan) for i, chan in zip(indices, results) if chan is not None]


def run_generate(config, out_path, jobs=1):
    """Generate the stochastic channels and write the component table."""
    channels = generate_channels(config, jobs=jobs)
    write_mpc_table(out_path, channels, _table_meta(config))
    return out_path


def run_compare(sim_path, ref_path, out_dir, floor_db=-120.0):
    """Compare two component tables; emit CDF files and the KS report."""
    sim = read_mpc_table(sim_path)
    ref = read_mpc_table(ref_path)
    report = compare_ensembles(sim, ref, floor_db=floor_db)
    write_report(out_dir, report)

    from .metrics import EmpiricalCdf, rms_delay_spread_arrays
    from pathlib import Path

    for label, table in (("sim", sim), ("ref", ref)):
        records = [(d, g) for d, g in table.to_ensemble()]
        mask_records = []
        for d, g in records:
            keep = g >= floor_db if floor_db is not None else np.ones(g.size, bool)
            if keep.any():
                mask_records.append((d[keep], g[keep]))
        pg = np.concatenate([g for _, g in mask_records])
        delay = np.concatenate([d for d, _ in mask_records])
        rmsds = [rms_delay_spread_arrays(d, g) for d, g in mask_records]
        base = Path(out_dir)
        write_cdf_file(base / f"{label}_pg_cdf.csv", EmpiricalCdf(pg))
        write_cdf_file(base / f"{label}_delay_cdf.csv", EmpiricalCdf(delay))
        write_cdf_file(base / f"{label}_rmsds_cdf.csv", EmpiricalCdf(rmsds))
    return report


def run_validate(path):
    """Re-read a generated component table and check the model invariants."""
    table = read_mpc_table(path)
    problems = []
    two_pi = 2.0 * math.pi
    if np.any(table.tau_ns < 0):
        problems.append("negative relative delays present")
    if np.any((table.aod_az < 0) | (table.aod_az >= 360) |
              (table.aoa_az < 0) | (table.aoa_az >= 360)):
        problems.append("azimuth outside [0, 360)")
    if np.any((table.aod_el < 0) | (table.aod_el > 180) |
              (table.aoa_el < 0) | (table.aoa_el > 180)):
        problems.append("elevation outside [0, 180]")
    if np.any((table.phase_rad < 0) | (table.phase_rad >= two_pi)):
        problems.append("phase outside [0, 2*pi)")

    meta = table.meta
    realized_prune = meta.get("prune_reference", "realized") == "realized"
    kinds = np.asarray(table.kind)
    for rx in np.unique(table.rx_index):
        rx_mask = table.rx_index == rx
        for cid in np.unique(table.cluster_id[rx_mask]):
            if cid < 0:
                continue
            mask = rx_mask & (table.cluster_id == cid)
            cursor = mask & (kinds == "cursor")
            if cursor.sum() != 1:
                problems.append(f"rx {rx} cluster {cid}: expected exactly one cursor")
                continue
            if realized_prune:
                cursor_pg = table.pg_db[cursor][0]
                diffuse = mask & ((kinds == "pre") | (kinds == "post"))
                if np.any(table.pg_db[diffuse] >= cursor_pg):
                    problems.append(
                        f"rx {rx} cluster {cid}: diffuse gain at or above the cursor")
    if "n_pre" in meta and "n_post" in meta and "max_order" in meta:
        n_pre, n_post = int(meta["n_pre"]), int(meta["n_post"])
        max_order = int(meta["max_order"])
        model = meta.get("model", "reduced")
        if model == "reduced":
            bound = max(1, max_order) * (n_pre + n_post) + 1
        elif model == "complete":
            bound = (n_pre + 1 + n_post) ** max(1, max_order)
        else:
            bound = 1
        for rx in np.unique(table.rx_index):
            rx_mask = table.rx_index == rx
            for cid in np.unique(table.cluster_id[rx_mask]):
                if cid < 0:
                    continue
                count = int((rx_mask & (table.cluster_id == cid)).sum())
                if count > bound:
                    problems.append(
                        f"rx {rx} cluster {cid}: {count} components exceeds "
                        f"the {model} bound {bound}")
    if problems:
        raise DataError(f"{path}: " + "; ".join(problems))
    return len(table)


def _cmd_trace(args):
    config = _load_config(args)
    run_trace(config, args.out)
    print(f"wrote D-ray table to {args.out}")
    return 0


def _cmd_generate(args):
    config = _load_config(args)
    run_generate(config, args.out, jobs=args.jobs)
    print(f"wrote component table to {args.out} "
          f"(backend: {_backend.backend_name()})")
    return 0


def _cmd_compare(args):
    floor = None if args.floor is not None and math.isinf(args.floor) else args.floor
    report = run_compare(args.sim, args.ref, args.out, floor_db=floor)
    sys.stdout.write(report.to_text())
    return 0


def _cmd_validate(args):
    n = run_validate(args.file)
    print(f"{args.file}: {n} components, all invariants hold")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qdchan",
        description="Quasi-deterministic mmWave channel generator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="ray-trace deterministic paths")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("generate", help="generate stochastic channels")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1,
                   help="receiver positions processed in parallel")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("compare", help="KS comparison of two component tables")
    p.add_argument("--sim", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--floor", type=float, default=-120.0,
                   help="dynamic-range floor in dB (-inf disables)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("validate", help="check a component table's invariants")
    p.add_argument("--file", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ParameterError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, MaterialLookupError, ResourceLimitError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
