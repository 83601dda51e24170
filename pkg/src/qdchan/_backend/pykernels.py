"""Pure-Python sampling kernels (fallback backend).

The compiled extension `_ckernels` implements the same functions. Both draw
from one counter-based splitmix64 stream and route every transcendental
through libm scalars (`math.log` here, `log` from libc there), so the two
backends produce bit-identical float64 outputs. Keep any change mirrored in
`_ckernels.pyx`.

Stream model: a stream is a 64-bit key; draw j of the stream is
mix64(key + (j + 1) * GOLDEN). Sub-streams are derived with `fold`, which is
order-sensitive, so distinct derivation paths never collide in practice.
"""

import math

U64_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

TWO_PI = 2.0 * math.pi
# 10*log10(e); built from a libm call so both backends hold the same double
TEN_LOG10E = 10.0 / math.log(10.0)

_INV_2_53 = 2.0**-53
_INV_2_52 = 2.0**-52

# Sub-stream layout shared by the cluster generators and the fused kernels.
SIDE_PRE = 0
SIDE_POST = 1
FAMILY_CURSOR_RL = 2
STAGE_ARRIVALS = 0
STAGE_POWERS = 1
STAGE_ANGLES = 2
STAGE_PHASES = 3
STAGE_RESIDUALS = 4


def mix64(z):
    """splitmix64 finalizer; full-avalanche 64-bit mix."""
    z &= U64_MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & U64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & U64_MASK
    return z ^ (z >> 31)


def fold(key, word):
    """Derive a sub-stream key; order-sensitive when chained."""
    return mix64(key ^ ((word & U64_MASK) * _GOLDEN & U64_MASK))


def derive_key(seed, path):
    key = mix64(seed & U64_MASK)
    for word in path:
        key = fold(key, word)
    return key


def stream_u64(key, counter):
    return mix64((key + ((counter + 1) * _GOLDEN & U64_MASK)) & U64_MASK)


def u01(key, counter):
    """Uniform double in [0, 1)."""
    return (stream_u64(key, counter) >> 11) * _INV_2_53


def u01_open(key, counter):
    """Uniform double in (0, 1); safe under log()."""
    return ((stream_u64(key, counter) >> 12) + 0.5) * _INV_2_52


# ---------------------------------------------------------------------------
# Scalar variate transforms. Each returns (value, next_counter).

def uniform(key, ctr, a, b):
    return a + (b - a) * u01(key, ctr), ctr + 1


def exponential(key, ctr, lam):
    return -math.log(u01_open(key, ctr)) / lam, ctr + 1


def normal(key, ctr, mu, sigma):
    # Box-Muller, cosine branch only: two u64 per variate keeps counters fixed
    u1 = u01_open(key, ctr)
    u2 = u01(key, ctr + 1)
    z = math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)
    return mu + sigma * z, ctr + 2


def rician(key, ctr, s, sigma):
    y, ctr = normal(key, ctr, s, sigma)
    z, ctr = normal(key, ctr, 0.0, sigma)
    return math.sqrt(y * y + z * z), ctr


def laplacian(key, ctr, mu, variance):
    b = math.sqrt(variance * 0.5)
    u = u01_open(key, ctr) - 0.5
    if u < 0.0:
        v = mu + b * math.log(1.0 + 2.0 * u)
    else:
        v = mu - b * math.log(1.0 - 2.0 * u)
    return v, ctr + 1


def wrap_azimuth(deg):
    """Wrap an azimuth angle into [0, 360)."""
    a = math.fmod(deg, 360.0)
    if a < 0.0:
        a += 360.0
    if a >= 360.0:
        a = 0.0
    return a


def fold_elevation(deg):
    """Mirror-fold a polar elevation angle into [0, 180]."""
    e = math.fmod(deg, 360.0)
    if e < 0.0:
        e += 360.0
    if e > 180.0:
        e = 360.0 - e
    return e


# ---------------------------------------------------------------------------
# Cluster-side stages. Each stage owns one sub-stream and starts its counter
# at the value handed in (0 when invoked through `synthesize_side`).

def side_arrivals(key, ctr, tau0, lam_s, lam_sigma, count, is_pre):
    """Poisson arrival times around tau0 for one cluster side.

    Draws the arrival rate once, then `count` exponential inter-arrival gaps.
    Pre-side arrivals run backwards from tau0 and stop at zero: once one goes
    negative all later ones would too, so generation breaks there. A rate of
    exactly zero (uncharacterized side) yields no arrivals.
    """
    lam, ctr = rician(key, ctr, lam_s, lam_sigma)
    taus = []
    if lam <= 0.0:
        return taus, lam, ctr
    acc = tau0
    for _ in range(count):
        gap, ctr = exponential(key, ctr, lam)
        if is_pre:
            acc = acc - gap
            if acc < 0.0:
                break
        else:
            acc = acc + gap
        taus.append(acc)
    return taus, lam, ctr


def side_powers(key, ctr, pg0_db, tau0, taus, k_s, k_sigma, g_s, g_sigma,
                ss_s, ss_sigma, prune_gain_db):
    """Per-component gains via the exponential power-delay decay law.

    Draws the loss factor K, decay constant gamma, and shadowing spread once,
    then one shadowing term per component. Components at or above the
    comparison gain are dropped. gamma == 0 disables the side for this
    cluster (the decay law would divide by zero).
    """
    k_db, ctr = rician(key, ctr, k_s, k_sigma)
    gamma, ctr = rician(key, ctr, g_s, g_sigma)
    sigma_s, ctr = rician(key, ctr, ss_s, ss_sigma)
    kept_taus = []
    pgs = []
    if gamma <= 0.0:
        return kept_taus, pgs, ctr
    for tau in taus:
        shadow, ctr = normal(key, ctr, 0.0, sigma_s)
        pg = (pg0_db - k_db
              - (math.fabs(tau - tau0) / gamma) * TEN_LOG10E
              + TEN_LOG10E * shadow)
        if pg < prune_gain_db:
            kept_taus.append(tau)
            pgs.append(pg)
    return kept_taus, pgs, ctr


def side_angles(key, ctr, count, aod_az0, aod_el0, aoa_az0, aoa_el0,
                saz_s, saz_sigma, sel_s, sel_sigma):
    """Laplacian angle offsets around the parent ray's departure/arrival."""
    sig_az, ctr = rician(key, ctr, saz_s, saz_sigma)
    sig_el, ctr = rician(key, ctr, sel_s, sel_sigma)
    var_az = sig_az * sig_az
    var_el = sig_el * sig_el
    aod_az = []
    aod_el = []
    aoa_az = []
    aoa_el = []
    for _ in range(count):
        o, ctr = laplacian(key, ctr, 0.0, var_az)
        aod_az.append(wrap_azimuth(aod_az0 + o))
        o, ctr = laplacian(key, ctr, 0.0, var_el)
        aod_el.append(fold_elevation(aod_el0 + o))
        o, ctr = laplacian(key, ctr, 0.0, var_az)
        aoa_az.append(wrap_azimuth(aoa_az0 + o))
        o, ctr = laplacian(key, ctr, 0.0, var_el)
        aoa_el.append(fold_elevation(aoa_el0 + o))
    return aod_az, aod_el, aoa_az, aoa_el, ctr


def side_phases(key, ctr, count):
    phases = []
    for _ in range(count):
        phases.append(TWO_PI * u01(key, ctr))
        ctr += 1
    return phases, ctr


def residual_losses(key, ctr, count, rl_triples):
    """Summed randomized reflection-loss residuals, one sum per component.

    rl_triples is a flat (s, sigma, mu) sequence, one triple per additional
    reflecting material. Draw order is per component, then per material.
    """
    out = []
    n_mat = len(rl_triples) // 3
    for _ in range(count):
        total = 0.0
        for j in range(n_mat):
            rl, ctr = rician(key, ctr, rl_triples[3 * j], rl_triples[3 * j + 1])
            total += rl - rl_triples[3 * j + 2]
        out.append(total)
    return out, ctr


def synthesize_side(side_key, is_pre, tau0, pg0_db, prune_gain_db,
                    aod_az0, aod_el0, aoa_az0, aoa_el0, count, params,
                    other_rl):
    """Generate one fully-pruned diffuse side of a cluster family.

    `params` is the 12-tuple (k_s, k_sigma, gamma_s, gamma_sigma,
    sigma_s_s, sigma_s_sigma, lambda_s, lambda_sigma, sa_az_s, sa_az_sigma,
    sa_el_s, sa_el_sigma) for this side. `other_rl` is the flat residual
    triple list for the remaining reflectors of a multi-bounce ray (empty
    for single reflections). Returns parallel lists
    (taus, pg_db, aod_az, aod_el, aoa_az, aoa_el, phases).
    """
    taus, _lam, _ = side_arrivals(
        fold(side_key, STAGE_ARRIVALS), 0, tau0, params[6], params[7],
        count, is_pre)
    taus, pgs, _ = side_powers(
        fold(side_key, STAGE_POWERS), 0, pg0_db, tau0, taus,
        params[0], params[1], params[2], params[3], params[4], params[5],
        prune_gain_db)
    n = len(taus)
    aod_az, aod_el, aoa_az, aoa_el, _ = side_angles(
        fold(side_key, STAGE_ANGLES), 0, n, aod_az0, aod_el0, aoa_az0,
        aoa_el0, params[8], params[9], params[10], params[11])
    phases, _ = side_phases(fold(side_key, STAGE_PHASES), 0, n)
    if other_rl:
        residuals, _ = residual_losses(
            fold(side_key, STAGE_RESIDUALS), 0, n, other_rl)
        pgs = [pg - r for pg, r in zip(pgs, residuals)]
        keep = [i for i in range(n) if pgs[i] < prune_gain_db]
        if len(keep) != n:
            taus = [taus[i] for i in keep]
            pgs = [pgs[i] for i in keep]
            aod_az = [aod_az[i] for i in keep]
            aod_el = [aod_el[i] for i in keep]
            aoa_az = [aoa_az[i] for i in keep]
            aoa_el = [aoa_el[i] for i in keep]
            phases = [phases[i] for i in keep]
    return taus, pgs, aod_az, aod_el, aoa_az, aoa_el, phases
