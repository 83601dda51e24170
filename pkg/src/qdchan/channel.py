"""Stochastic channel engine: dress deterministic rays with diffuse clusters.

Each reflected ray becomes a cluster: the specular cursor plus pre-cursor
and post-cursor diffuse components whose arrival times, gains, angles and
phases are drawn per the reflecting material's statistics. Single
reflections use one parameter family; higher orders are handled by either
the reduced heuristic (one family per bounce material, gains adjusted by the
other bounces' randomized residual losses) or the complete heuristic
(every component of bounce k spawns a full family at bounce k+1).

Randomness layout (stable across runs, threads and backends): the channel
stream spawns one stream per cluster; cluster child (1 + level, parent)
addresses a family, family children 0/1/2 the pre side, post side and
cursor reflection-loss draw, and side children 0..4 the arrival, power,
angle, phase and residual stages.
"""

import math
from dataclasses import dataclass, field, replace

from . import _backend
from ._backend.pykernels import FAMILY_CURSOR_RL, SIDE_POST, SIDE_PRE, TEN_LOG10E
from .distributions import RngStream, sample_rician, sample_uniform
from .errors import ParameterError, ResourceLimitError
from .geometry import SPEED_OF_LIGHT, Point3, _as_point, trace

MODEL_VARIANTS = ("drays_only", "reduced", "complete")
PRUNE_REFERENCES = ("realized", "deterministic")

KIND_DIRECT = "direct"
KIND_CURSOR = "cursor"
KIND_PRE = "pre"
KIND_POST = "post"

_SIDES = ((KIND_PRE, SIDE_PRE, True), (KIND_POST, SIDE_POST, False))


@dataclass
class Mpc:
    """One multipath component in the relative delay frame."""

    kind: str
    tau: float            # ns, relative to the direct-ray arrival
    pg_db: float
    aod_az: float
    aod_el: float
    aoa_az: float
    aoa_el: float
    phase: float          # rad in [0, 2*pi)


@dataclass
class Cluster:
    """A deterministic ray's cursor plus its diffuse components."""

    dray: object
    cursor: Mpc
    pre: list
    post: list
    realized_pg0_db: float

    def mpcs(self):
        yield self.cursor
        yield from self.pre
        yield from self.post

    def size(self):
        return 1 + len(self.pre) + len(self.post)


@dataclass
class ChannelInstance:
    """Everything generated for one TX/RX pair, plus the config snapshot."""

    tx: Point3
    rx: Point3
    t_dir: float          # ns
    direct: object        # Mpc or None
    clusters: list
    meta: dict = field(default_factory=dict)

    def mpcs(self):
        if self.direct is not None:
            yield self.direct
        for cluster in self.clusters:
            yield from cluster.mpcs()

    def mpc_count(self):
        return sum(1 for _ in self.mpcs())


@dataclass(frozen=True)
class GenConfig:
    """Generation knobs for one scenario."""

    model: str = "reduced"
    max_order: int = 2
    n_pre: int = 3
    n_post: int = 16
    prune_reference: str = "realized"
    carrier_frequency_hz: float = 60e9
    force_nlos: bool = False
    mpc_cap: int = 100_000

    def __post_init__(self):
        if self.model not in MODEL_VARIANTS:
            raise ParameterError(f"model must be one of {MODEL_VARIANTS}, got {self.model!r}")
        if self.prune_reference not in PRUNE_REFERENCES:
            raise ParameterError(
                f"prune_reference must be one of {PRUNE_REFERENCES}, got {self.prune_reference!r}")
        if self.n_pre < 0 or self.n_post < 0:
            raise ParameterError("n_pre and n_post must be >= 0")
        if self.carrier_frequency_hz <= 0:
            raise ParameterError("carrier_frequency_hz must be > 0")
        if self.max_order < 0:
            raise ParameterError("max_order must be >= 0")

    @property
    def wavelength_m(self):
        return SPEED_OF_LIGHT / self.carrier_frequency_hz


def mpc_gain_db(pg0_db, k_db, gamma, shadow, dtau):
    """Exponential power-delay decay law for one diffuse component."""
    return pg0_db - k_db - (abs(dtau) / gamma) * TEN_LOG10E + TEN_LOG10E * shadow


# ---------------------------------------------------------------------------
# Spec-level operations. Each consumes the stream it is handed; the cluster
# generators hand them the stage sub-streams named in the module docstring.

def realize_cursor_gain(pg_det_db, materials, rng):
    """Randomize the cursor gain with one reflection-loss draw per bounce.

    Returns (realized gain, per-bounce residual list). `materials` may be a
    single MaterialParams (one bounce) or a sequence ordered by bounce.
    """
    if not isinstance(materials, (list, tuple)):
        materials = (materials,)
    residuals = []
    gain = pg_det_db
    for mat in materials:
        rl = sample_rician(rng, *mat.rl)
        residuals.append(rl - mat.mu_rl_db)
        gain -= residuals[-1]
    return gain, residuals


def generate_arrivals(tau0, material, side, count, rng):
    """Arrival times for one cluster side; see the arrival-stage kernel."""
    if tau0 < 0:
        raise ParameterError(f"tau0 must be >= 0, got {tau0}")
    lam_s, lam_sigma = material.pair("lambda", side)
    kern = _backend.kernels
    taus, _lam, rng._ctr = kern.side_arrivals(
        rng.key, rng.counter, tau0, lam_s, lam_sigma, count, side == KIND_PRE)
    return taus


def generate_cursor_powers(pg0_db, tau0, taus, material, side, rng, prune_gain_db=None):
    """Gains for the given arrivals; components >= the prune gain removed."""
    if prune_gain_db is None:
        prune_gain_db = pg0_db
    k_pair = material.pair("k", side)
    g_pair = material.pair("gamma", side)
    ss_pair = material.pair("sigma_s", side)
    kern = _backend.kernels
    kept, pgs, rng._ctr = kern.side_powers(
        rng.key, rng.counter, pg0_db, tau0, list(taus),
        k_pair[0], k_pair[1], g_pair[0], g_pair[1], ss_pair[0], ss_pair[1],
        prune_gain_db)
    return kept, pgs


def generate_cursor_angles(base, material, count, rng):
    """Angle tuples (aod_az, aod_el, aoa_az, aoa_el) for `count` components."""
    kern = _backend.kernels
    aod_az, aod_el, aoa_az, aoa_el, rng._ctr = kern.side_angles(
        rng.key, rng.counter, count, base[0], base[1], base[2], base[3],
        *material.sigma_alpha_az, *material.sigma_alpha_el)
    return list(zip(aod_az, aod_el, aoa_az, aoa_el))


def generate_phases(count, rng):
    """Independent uniform phases in [0, 2*pi)."""
    return [sample_uniform(rng, 0.0, 2.0 * math.pi) for _ in range(count)]


# ---------------------------------------------------------------------------
# Cluster generators.

def _family_stream(cluster_rng, level, parent_index):
    return cluster_rng.child(1 + level, parent_index)


def _side_mpcs(family_rng, kind, is_pre, tau0, pg0_db, prune_gain_db, base,
               count, material, other_rl):
    side_key = family_rng.child(SIDE_PRE if is_pre else SIDE_POST).key
    kern = _backend.kernels
    taus, pgs, aod_az, aod_el, aoa_az, aoa_el, phases = kern.synthesize_side(
        side_key, is_pre, tau0, pg0_db, prune_gain_db,
        base[0], base[1], base[2], base[3], count,
        material.side_params(kind), tuple(other_rl))
    return [
        Mpc(kind=kind, tau=taus[i], pg_db=pgs[i],
            aod_az=aod_az[i], aod_el=aod_el[i],
            aoa_az=aoa_az[i], aoa_el=aoa_el[i], phase=phases[i])
        for i in range(len(taus))
    ]


def _sort_sides(pre, post):
    pre.sort(key=lambda m: -m.tau)
    post.sort(key=lambda m: m.tau)


def generate_cluster_reduced(dray, library, config, rng):
    """Cluster for an order-n ray, one diffuse family per bounce material.

    Follows the multi-reflection recipe: family f is generated around the
    cursor gain as of bounce f, then each of its components absorbs fresh
    residual losses for the other n-1 materials. Components at or above the
    cluster's comparison gain after that adjustment are removed so the
    pruning invariant holds for every emitted component.
    """
    if dray.order < 1:
        raise ParameterError("reduced cluster generation needs order >= 1")
    mats = [library.resolve(name) for name in dray.materials]
    n = len(mats)

    gains = []
    gain = dray.pg_det_db
    for f, mat in enumerate(mats):
        rl_rng = _family_stream(rng, f, 0).child(FAMILY_CURSOR_RL)
        rl = sample_rician(rl_rng, *mat.rl)
        gain -= rl - mat.mu_rl_db
        gains.append(gain)
    realized = gains[-1]
    prune_gain = realized if config.prune_reference == "realized" else dray.pg_det_db

    base = (dray.aod_az, dray.aod_el, dray.aoa_az, dray.aoa_el)
    pre, post = [], []
    for f, mat in enumerate(mats):
        family_rng = _family_stream(rng, f, 0)
        other_rl = []
        for j, other in enumerate(mats):
            if j != f:
                other_rl.extend(other.rl_triple())
        for kind, _side, is_pre in _SIDES:
            if mat.side_disabled(kind):
                continue
            out = _side_mpcs(family_rng, kind, is_pre, dray.tau, gains[f],
                             prune_gain, base, config.n_pre if is_pre else config.n_post,
                             mat, other_rl)
            (pre if is_pre else post).extend(out)
    _sort_sides(pre, post)
    cursor = Mpc(kind=KIND_CURSOR, tau=dray.tau, pg_db=realized,
                 aod_az=base[0], aod_el=base[1], aoa_az=base[2], aoa_el=base[3],
                 phase=0.0)
    return Cluster(dray=dray, cursor=cursor, pre=pre, post=post,
                   realized_pg0_db=realized)


def generate_cluster_first_order(dray, library, config, rng):
    """Single-reflection cluster; the order-1 case of the reduced generator."""
    if dray.order != 1:
        raise ParameterError(f"first-order generator needs an order-1 ray, got order {dray.order}")
    return generate_cluster_reduced(dray, library, config, rng)


@dataclass
class _Component:
    tau: float
    pg_db: float
    base: tuple
    phase: float
    is_cursor: bool


def generate_cluster_complete(dray, library, config, rng):
    """Cluster via the exponential heuristic: families of families.

    Bounce 1 generates a full family around the cursor; every resulting
    component (specular and diffuse) then spawns its own family at bounce 2
    with that bounce's material, and so on. Component count grows like
    (n_pre + 1 + n_post) ** order and is guarded by config.mpc_cap.
    """
    if dray.order < 1:
        raise ParameterError("complete cluster generation needs order >= 1")
    mats = [library.resolve(name) for name in dray.materials]
    base0 = (dray.aod_az, dray.aod_el, dray.aoa_az, dray.aoa_el)
    components = [_Component(tau=dray.tau, pg_db=dray.pg_det_db, base=base0,
                             phase=0.0, is_cursor=True)]
    per_parent = config.n_pre + 1 + config.n_post
    for level, mat in enumerate(mats):
        if len(components) * per_parent > config.mpc_cap:
            raise ResourceLimitError(
                f"complete model would exceed mpc_cap={config.mpc_cap} at "
                f"bounce {level + 1} ({len(components)} parents)")
        new_components = []
        for p_idx, parent in enumerate(components):
            family_rng = _family_stream(rng, level, p_idx)
            rl = sample_rician(family_rng.child(FAMILY_CURSOR_RL), *mat.rl)
            pg0 = parent.pg_db - (rl - mat.mu_rl_db)
            prune_gain = pg0 if config.prune_reference == "realized" else parent.pg_db
            children = {KIND_PRE: [], KIND_POST: []}
            for kind, _side, is_pre in _SIDES:
                if mat.side_disabled(kind):
                    continue
                out = _side_mpcs(family_rng, kind, is_pre, parent.tau, pg0,
                                 prune_gain, parent.base,
                                 config.n_pre if is_pre else config.n_post,
                                 mat, ())
                children[kind] = [
                    _Component(tau=m.tau, pg_db=m.pg_db,
                               base=(m.aod_az, m.aod_el, m.aoa_az, m.aoa_el),
                               phase=m.phase, is_cursor=False)
                    for m in out
                ]
            new_components.extend(children[KIND_PRE])
            new_components.append(replace(parent, pg_db=pg0))
            new_components.extend(children[KIND_POST])
        components = new_components
    cursor_comp = next(c for c in components if c.is_cursor)
    pre, post = [], []
    for c in components:
        if c.is_cursor:
            continue
        kind = KIND_PRE if c.tau < dray.tau else KIND_POST
        mpc = Mpc(kind=kind, tau=c.tau, pg_db=c.pg_db,
                  aod_az=c.base[0], aod_el=c.base[1],
                  aoa_az=c.base[2], aoa_el=c.base[3], phase=c.phase)
        (pre if kind == KIND_PRE else post).append(mpc)
    _sort_sides(pre, post)
    cursor = Mpc(kind=KIND_CURSOR, tau=dray.tau, pg_db=cursor_comp.pg_db,
                 aod_az=base0[0], aod_el=base0[1], aoa_az=base0[2],
                 aoa_el=base0[3], phase=0.0)
    return Cluster(dray=dray, cursor=cursor, pre=pre, post=post,
                   realized_pg0_db=cursor_comp.pg_db)


def _cluster_drays_only(dray):
    cursor = Mpc(kind=KIND_CURSOR, tau=dray.tau, pg_db=dray.pg_det_db,
                 aod_az=dray.aod_az, aod_el=dray.aod_el,
                 aoa_az=dray.aoa_az, aoa_el=dray.aoa_el, phase=0.0)
    return Cluster(dray=dray, cursor=cursor, pre=[], post=[],
                   realized_pg0_db=dray.pg_det_db)


def generate_cluster(dray, library, config, rng):
    """Dispatch to the configured cluster generator."""
    if config.model == "drays_only":
        return _cluster_drays_only(dray)
    if config.model == "reduced":
        return generate_cluster_reduced(dray, library, config, rng)
    return generate_cluster_complete(dray, library, config, rng)


def generate_channel(room, tx, rx, library, config, rng, drays=None):
    """Full channel instance for one TX/RX pair.

    `drays` bypasses the internal tracer (for externally traced geometry);
    otherwise the box-room tracer runs with the configured carrier and order.
    The direct ray is emitted untouched (free-space gain, zero phase) unless
    config.force_nlos drops it; the relative delay frame is always anchored
    at the hypothetical direct arrival.
    """
    tx = _as_point(tx)
    rx = _as_point(rx)
    if drays is None:
        drays = trace(room, tx, rx, config.max_order,
                      lambda_c=config.wavelength_m, library=library)
    t_dir = tx.distance_to(rx) / SPEED_OF_LIGHT * 1e9

    direct = None
    clusters = []
    cluster_index = 0
    for ray in drays:
        if ray.order == 0:
            if not config.force_nlos:
                direct = Mpc(kind=KIND_DIRECT, tau=0.0, pg_db=ray.pg_det_db,
                             aod_az=ray.aod_az, aod_el=ray.aod_el,
                             aoa_az=ray.aoa_az, aoa_el=ray.aoa_el, phase=0.0)
            continue
        clusters.append(generate_cluster(ray, library, config,
                                         rng.child(cluster_index)))
        cluster_index += 1

    meta = {
        "seed": rng.seed,
        "stream_path": list(rng.path),
        "model": config.model,
        "max_order": config.max_order,
        "n_pre": config.n_pre,
        "n_post": config.n_post,
        "prune_reference": config.prune_reference,
        "carrier_frequency_hz": config.carrier_frequency_hz,
        "force_nlos": config.force_nlos,
    }
    return ChannelInstance(tx=tx, rx=rx, t_dir=t_dir, direct=direct,
                           clusters=clusters, meta=meta)
