"""Validation statistics: empirical CDFs, KS distances, delay spreads.

Ensemble comparisons pool per-component path gains and absolute delays
across all receiver positions (matching how generated channels are judged
against reference traces), while the RMS delay spread yields one value per
channel instance. A dynamic-range floor, -120 dB by default, drops
components a channel sounder would not see.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

DEFAULT_FLOOR_DB = -120.0


class EmpiricalCdf:
    """Right-continuous step CDF over a finite sample."""

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise DataError("cannot build an empirical CDF from an empty sample")
        self.values = np.sort(arr)

    @property
    def n(self):
        return self.values.size

    def evaluate(self, x):
        """F(x) = (#samples <= x) / n; accepts scalars or arrays."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=np.float64),
                              side="right")
        return idx / self.n

    def __len__(self):
        return self.values.size


def empirical_cdf(values):
    return EmpiricalCdf(values)


def ks_statistic(a, b):
    """Exact two-sample KS distance sup_x |F_a(x) - F_b(x)|.

    Both step functions only change at sample points, so the supremum is
    attained on the merged breakpoint set.
    """
    breakpoints = np.union1d(a.values, b.values)
    return float(np.max(np.abs(a.evaluate(breakpoints) - b.evaluate(breakpoints))))


def rms_delay_spread(mpcs):
    """Power-weighted standard deviation of component delays, in ns.

    Accepts a list of Mpc objects (uses tau and pg_db); invariant to common
    delay offsets and to uniform dB gain shifts.
    """
    if not mpcs:
        raise DataError("RMS delay spread needs at least one component")
    taus = np.array([m.tau for m in mpcs], dtype=np.float64)
    gains = np.array([m.pg_db for m in mpcs], dtype=np.float64)
    return rms_delay_spread_arrays(taus, gains)


def rms_delay_spread_arrays(delays_ns, gains_db):
    delays_ns = np.asarray(delays_ns, dtype=np.float64)
    gains_db = np.asarray(gains_db, dtype=np.float64)
    if delays_ns.size == 0:
        raise DataError("RMS delay spread needs at least one component")
    # normalize against the peak so the weights cannot underflow
    w = 10.0 ** ((gains_db - gains_db.max()) / 10.0)
    w = w / w.sum()
    mean = float(w @ delays_ns)
    return float(np.sqrt(w @ (delays_ns - mean) ** 2))


@dataclass
class ComparisonReport:
    """Three KS distances between a simulated and a reference ensemble."""

    ks_pg: float
    ks_delay: float
    ks_rmsds: float
    n_sim_mpcs: int
    n_ref_mpcs: int
    n_sim_channels: int
    n_ref_channels: int
    floor_db: float
    per_position: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "ks_pg": self.ks_pg,
            "ks_delay": self.ks_delay,
            "ks_rmsds": self.ks_rmsds,
            "n_sim_mpcs": self.n_sim_mpcs,
            "n_ref_mpcs": self.n_ref_mpcs,
            "n_sim_channels": self.n_sim_channels,
            "n_ref_channels": self.n_ref_channels,
            "floor_db": self.floor_db,
        }
        if self.per_position:
            out["per_position"] = {
                str(k): {"n_mpcs": v[0], "rms_delay_spread_ns": v[1]}
                for k, v in self.per_position.items()
            }
        return out

    def to_text(self):
        lines = [
            "ensemble comparison",
            f"  KS path gain        : {self.ks_pg:.6f}",
            f"  KS absolute delay   : {self.ks_delay:.6f}",
            f"  KS RMS delay spread : {self.ks_rmsds:.6f}",
            f"  components (sim/ref): {self.n_sim_mpcs}/{self.n_ref_mpcs}",
            f"  channels   (sim/ref): {self.n_sim_channels}/{self.n_ref_channels}",
            f"  dynamic-range floor : {self.floor_db} dB",
        ]
        return "\n".join(lines) + "\n"


def _channel_arrays(channel):
    """(absolute delays, gains) for every component of a ChannelInstance."""
    delays = []
    gains = []
    for m in channel.mpcs():
        delays.append(m.tau + channel.t_dir)
        gains.append(m.pg_db)
    return np.asarray(delays), np.asarray(gains)


def as_ensemble(obj):
    """Normalize to a list of (delay_abs_ns array, pg_db array) per channel.

    Accepts a list of ChannelInstance objects, an object with a
    ``to_ensemble()`` method (e.g. a parsed trace table), or an already
    normalized list of array pairs.
    """
    if hasattr(obj, "to_ensemble"):
        return obj.to_ensemble()
    records = []
    for item in obj:
        if hasattr(item, "clusters"):
            records.append(_channel_arrays(item))
        else:
            delays, gains = item
            records.append((np.asarray(delays, dtype=np.float64),
                            np.asarray(gains, dtype=np.float64)))
    return records


def _filtered(records, floor_db, label):
    kept = []
    for delays, gains in records:
        if floor_db is not None:
            mask = gains >= floor_db
            delays, gains = delays[mask], gains[mask]
        if delays.size:
            kept.append((delays, gains))
    if not kept:
        raise DataError(
            f"{label} ensemble is empty after applying the {floor_db} dB floor")
    return kept


def compare_ensembles(sim, ref, floor_db=DEFAULT_FLOOR_DB, per_position=False):
    """KS distances for path gain, absolute delay, and RMS delay spread.

    Path gains and delays are pooled over the whole ensemble; the delay
    spread is computed per channel. `floor_db=None` disables the
    dynamic-range filter.
    """
    sim_records = _filtered(as_ensemble(sim), floor_db, "simulated")
    ref_records = _filtered(as_ensemble(ref), floor_db, "reference")

    def pooled(records, idx):
        return np.concatenate([r[idx] for r in records])

    sim_pg = pooled(sim_records, 1)
    ref_pg = pooled(ref_records, 1)
    sim_delay = pooled(sim_records, 0)
    ref_delay = pooled(ref_records, 0)
    sim_rmsds = np.array([rms_delay_spread_arrays(d, g) for d, g in sim_records])
    ref_rmsds = np.array([rms_delay_spread_arrays(d, g) for d, g in ref_records])

    report = ComparisonReport(
        ks_pg=ks_statistic(EmpiricalCdf(sim_pg), EmpiricalCdf(ref_pg)),
        ks_delay=ks_statistic(EmpiricalCdf(sim_delay), EmpiricalCdf(ref_delay)),
        ks_rmsds=ks_statistic(EmpiricalCdf(sim_rmsds), EmpiricalCdf(ref_rmsds)),
        n_sim_mpcs=int(sim_pg.size),
        n_ref_mpcs=int(ref_pg.size),
        n_sim_channels=len(sim_records),
        n_ref_channels=len(ref_records),
        floor_db=floor_db if floor_db is not None else float("-inf"),
    )
    if per_position:
        report.per_position = {
            i: (int(d.size), rms_delay_spread_arrays(d, g))
            for i, (d, g) in enumerate(sim_records)
        }
    return report
