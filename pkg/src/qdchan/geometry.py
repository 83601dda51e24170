"""Method-of-images ray tracer for axis-aligned box rooms.

Produces the deterministic rays (direct plus specular reflections) that seed
the stochastic model. Delays are expressed both absolutely and relative to
the direct-ray arrival time t_dir = d(tx, rx) / c, so the direct ray sits at
tau = 0 and every reflection at tau > 0.

Angle convention: azimuth is atan2(dy, dx) wrapped to [0, 360); elevation is
the polar angle from +z in [0, 180]. Plots that want elevation in [-45, 45]
should display 90 - elevation.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

from ._backend.pykernels import wrap_azimuth
from .errors import GeometryError, ParameterError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
DEFAULT_CARRIER_HZ = 60e9
WAVELENGTH_60GHZ = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ

#: Hard ceiling on reflection order unless explicitly raised by the caller.
MAX_TRACE_ORDER = 3


class Face(IntEnum):
    """The six faces of a box room; Z0 is the floor, ZL the ceiling."""

    X0 = 0
    XL = 1
    Y0 = 2
    YL = 3
    Z0 = 4
    ZL = 5

    @property
    def axis(self):
        return self.value // 2

    @property
    def is_max(self):
        return self.value % 2 == 1


FACE_NAMES = {
    "x0": Face.X0,
    "xl": Face.XL,
    "y0": Face.Y0,
    "yl": Face.YL,
    "z0": Face.Z0,
    "zl": Face.ZL,
    "floor": Face.Z0,
    "ceiling": Face.ZL,
}


class Point3(NamedTuple):
    x: float
    y: float
    z: float

    def distance_to(self, other):
        return math.dist(self, other)


def _as_point(p):
    if isinstance(p, Point3):
        return p
    return Point3(float(p[0]), float(p[1]), float(p[2]))


@dataclass(frozen=True)
class Room:
    """Axis-aligned box with a material name assigned to each face."""

    dimensions: tuple
    surface_materials: dict

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != 3 or any(d <= 0.0 for d in dims):
            raise GeometryError(f"room dimensions must be 3 positive lengths, got {self.dimensions}")
        object.__setattr__(self, "dimensions", dims)
        mats = {}
        for key, name in self.surface_materials.items():
            face = key if isinstance(key, Face) else FACE_NAMES.get(str(key).lower())
            if face is None:
                raise GeometryError(f"unknown face key {key!r}; use one of {sorted(FACE_NAMES)}")
            mats[face] = str(name)
        missing = [f.name for f in Face if f not in mats]
        if missing:
            raise GeometryError(f"faces without a material: {missing}")
        object.__setattr__(self, "surface_materials", mats)

    def face_plane(self, face):
        """(axis, coordinate) of the face plane."""
        return face.axis, (self.dimensions[face.axis] if face.is_max else 0.0)

    def contains_strict(self, p):
        return all(0.0 < p[i] < self.dimensions[i] for i in range(3))


@dataclass
class DRay:
    """One deterministic ray: the direct path or a specular reflection chain."""

    order: int
    delay_abs: float          # ns
    tau: float                # ns relative to the direct-ray arrival
    path_length: float        # m
    pg_det_db: float          # deterministic path gain (mean losses only)
    aod_az: float
    aod_el: float
    aoa_az: float
    aoa_el: float
    materials: list = field(default_factory=list)
    bounce_points: list = field(default_factory=list)


def compute_angles(a, b):
    """Azimuth/elevation of the direction from `a` toward `b`, in degrees."""
    a = _as_point(a)
    b = _as_point(b)
    dx, dy, dz = b.x - a.x, b.y - a.y, b.z - a.z
    r = math.sqrt(dx * dx + dy * dy + dz * dz)
    if r == 0.0:
        raise GeometryError("cannot compute angles of a zero-length direction")
    az = wrap_azimuth(math.degrees(math.atan2(dy, dx)))
    el = math.degrees(math.acos(max(-1.0, min(1.0, dz / r))))
    return az, el


def free_space_gain_db(path_length, lambda_c):
    """Free-space path gain 20*log10(lambda_c / (4*pi*path_length)) in dB."""
    if path_length <= 0.0:
        raise ParameterError(f"path_length must be > 0, got {path_length}")
    if lambda_c <= 0.0:
        raise ParameterError(f"lambda_c must be > 0, got {lambda_c}")
    return 20.0 * math.log10(lambda_c / (4.0 * math.pi * path_length))


def deterministic_gain_db(ray, library, lambda_c=WAVELENGTH_60GHZ):
    """Deterministic gain: free-space term minus each bounce's mean loss."""
    gain = free_space_gain_db(ray.path_length, lambda_c)
    for name in ray.materials:
        gain -= library.resolve(name).mu_rl_db
    return gain


def _mirror(p, axis, coord):
    q = list(p)
    q[axis] = 2.0 * coord - q[axis]
    return Point3(*q)


def _face_sequences(order):
    for seq in itertools.product(tuple(Face), repeat=order):
        if any(seq[i] == seq[i + 1] for i in range(len(seq) - 1)):
            continue
        yield seq


def _trace_sequence(room, tx, rx, seq):
    """Bounce points for one face sequence, or None if geometrically invalid."""
    n = len(seq)
    # images[k] = rx mirrored across faces seq[n-1], ..., seq[k]
    images = [None] * (n + 1)
    images[n] = rx
    for k in range(n - 1, -1, -1):
        axis, coord = room.face_plane(seq[k])
        images[k] = _mirror(images[k + 1], axis, coord)
    points = []
    prev = tx
    for k in range(n):
        axis, coord = room.face_plane(seq[k])
        target = images[k + 1]
        denom = target[axis] - prev[axis]
        if denom == 0.0:
            return None
        t = (coord - prev[axis]) / denom
        if not 0.0 < t < 1.0:
            return None
        hit = Point3(
            prev.x + t * (target.x - prev.x),
            prev.y + t * (target.y - prev.y),
            prev.z + t * (target.z - prev.z),
        )
        hit = _snap_to_plane(hit, axis, coord)
        for i in range(3):
            if i != axis and not 0.0 <= hit[i] <= room.dimensions[i]:
                return None
        points.append(hit)
        prev = hit
    return points


def _snap_to_plane(p, axis, coord):
    q = list(p)
    q[axis] = coord
    return Point3(*q)


def _polyline_length(points):
    return sum(points[i].distance_to(points[i + 1]) for i in range(len(points) - 1))


def trace(room, tx, rx, max_order, lambda_c=WAVELENGTH_60GHZ, library=None,
          order_ceiling=MAX_TRACE_ORDER):
    """Direct ray plus every valid specular path up to `max_order` bounces.

    When `library` is given, each ray's deterministic gain includes the mean
    reflection loss of its bounce materials; otherwise only the free-space
    term is filled in. Returned rays are sorted by (order, delay).
    """
    tx = _as_point(tx)
    rx = _as_point(rx)
    if not room.contains_strict(tx):
        raise GeometryError(f"tx {tuple(tx)} is not strictly inside the room")
    if not room.contains_strict(rx):
        raise GeometryError(f"rx {tuple(rx)} is not strictly inside the room")
    if tx == rx:
        raise GeometryError("tx and rx coincide")
    if max_order < 0:
        raise ParameterError(f"max_order must be >= 0, got {max_order}")
    if max_order > order_ceiling:
        raise ParameterError(
            f"max_order {max_order} exceeds the ceiling {order_ceiling}")

    def det_gain(length, materials):
        gain = free_space_gain_db(length, lambda_c)
        if library is not None:
            for name in materials:
                gain -= library.resolve(name).mu_rl_db
        return gain

    t_dir = tx.distance_to(rx) / SPEED_OF_LIGHT * 1e9
    aod_az, aod_el = compute_angles(tx, rx)
    aoa_az, aoa_el = compute_angles(rx, tx)
    rays = [DRay(
        order=0,
        delay_abs=t_dir,
        tau=0.0,
        path_length=tx.distance_to(rx),
        pg_det_db=det_gain(tx.distance_to(rx), ()),
        aod_az=aod_az, aod_el=aod_el, aoa_az=aoa_az, aoa_el=aoa_el,
    )]

    for order in range(1, max_order + 1):
        for seq in _face_sequences(order):
            points = _trace_sequence(room, tx, rx, seq)
            if points is None:
                continue
            chain = [tx] + points + [rx]
            length = _polyline_length(chain)
            materials = [room.surface_materials[f] for f in seq]
            delay = length / SPEED_OF_LIGHT * 1e9
            aod = compute_angles(tx, points[0])
            aoa = compute_angles(rx, points[-1])
            rays.append(DRay(
                order=order,
                delay_abs=delay,
                tau=delay - t_dir,
                path_length=length,
                pg_det_db=det_gain(length, materials),
                aod_az=aod[0], aod_el=aod[1],
                aoa_az=aoa[0], aoa_el=aoa[1],
                materials=materials,
                bounce_points=points,
            ))

    rays.sort(key=lambda r: (r.order, r.delay_abs))
    return rays
