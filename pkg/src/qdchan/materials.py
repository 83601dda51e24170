"""Surface-material parameter sets and the library file format.

Each material carries the Rician (s, sigma) pair for every stochastic
quantity of the model, split into pre- and post-cursor families where the
underlying measurements distinguish them, plus the mean reflection loss.
A family whose k/gamma/sigma_s/lambda pairs are all (0, 0) was never
characterized and generates no diffuse components.

Library files are YAML: a top-level list of material mappings. Units:
k_* dB, gamma_* ns, sigma_s_* nepers, lambda_* 1/ns, sigma_alpha_* degrees,
rl and mu_rl_db dB.
"""

import importlib.resources
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import MaterialLookupError, SchemaError

PAIR_KEYS = (
    "k_pre", "k_post",
    "gamma_pre", "gamma_post",
    "sigma_s_pre", "sigma_s_post",
    "lambda_pre", "lambda_post",
    "sigma_alpha_az", "sigma_alpha_el",
    "rl",
)

_SIDE_KEYS = ("k", "gamma", "sigma_s", "lambda")

#: Search-path environment variable for named libraries.
MATLIB_PATH_ENV = "QDCHAN_MATLIB_PATH"


@dataclass(frozen=True)
class MaterialParams:
    """All stochastic parameters for one surface material."""

    name: str
    mu_rl_db: float
    k_pre: tuple
    k_post: tuple
    gamma_pre: tuple
    gamma_post: tuple
    sigma_s_pre: tuple
    sigma_s_post: tuple
    lambda_pre: tuple
    lambda_post: tuple
    sigma_alpha_az: tuple
    sigma_alpha_el: tuple
    rl: tuple
    aliases: tuple = ()

    def pair(self, quantity, side=None):
        """Look up an (s, sigma) pair, e.g. pair('k', 'pre') or pair('rl')."""
        key = quantity if side is None else f"{quantity}_{side}"
        return getattr(self, key)

    def side_disabled(self, side):
        """True when this cursor family was not characterized (all-zero)."""
        return all(self.pair(q, side) == (0.0, 0.0) for q in _SIDE_KEYS)

    def side_params(self, side):
        """12-tuple consumed by the synthesis kernels for one side."""
        return (
            *self.pair("k", side),
            *self.pair("gamma", side),
            *self.pair("sigma_s", side),
            *self.pair("lambda", side),
            *self.sigma_alpha_az,
            *self.sigma_alpha_el,
        )

    def rl_triple(self):
        return (self.rl[0], self.rl[1], self.mu_rl_db)


class MaterialLibrary:
    """Immutable name -> MaterialParams map with optional fallback borrowing.

    A fallback entry lets an uncharacterized surface (e.g. the floor) borrow
    another material's reflection-loss statistics while keeping diffuse
    generation off. Lookups are case-sensitive and also match aliases.
    """

    def __init__(self, materials, fallbacks=None):
        mats = list(materials)
        self._by_name = {}
        for m in mats:
            for key in (m.name, *m.aliases):
                if key in self._by_name:
                    raise SchemaError(f"duplicate material name or alias: {key!r}")
                self._by_name[key] = m
        self.materials = {m.name: m for m in mats}
        self.fallbacks = dict(fallbacks or {})
        self._derived = {}

    def __len__(self):
        return len(self.materials)

    def __contains__(self, name):
        return name in self._by_name

    def names(self):
        return list(self.materials)

    def with_fallbacks(self, fallbacks):
        return MaterialLibrary(self.materials.values(), fallbacks)

    def resolve(self, name):
        """Material for `name`, applying the fallback rule if configured."""
        m = self._by_name.get(name)
        if m is not None:
            return m
        target_name = self.fallbacks.get(name)
        if target_name is None:
            raise MaterialLookupError(
                f"unknown material {name!r} and no fallback configured")
        if name not in self._derived:
            target = self._by_name.get(target_name)
            if target is None:
                raise MaterialLookupError(
                    f"fallback target {target_name!r} for {name!r} is not in the library")
            zero = (0.0, 0.0)
            self._derived[name] = MaterialParams(
                name=name, mu_rl_db=target.mu_rl_db,
                k_pre=zero, k_post=zero,
                gamma_pre=zero, gamma_post=zero,
                sigma_s_pre=zero, sigma_s_post=zero,
                lambda_pre=zero, lambda_post=zero,
                sigma_alpha_az=zero, sigma_alpha_el=zero,
                rl=target.rl,
            )
        return self._derived[name]


def resolve(library, name):
    return library.resolve(name)


def _parse_pair(raw, where):
    if (not isinstance(raw, (list, tuple))) or len(raw) != 2:
        raise SchemaError(f"{where}: expected a [s, sigma] pair, got {raw!r}")
    try:
        s, sigma = float(raw[0]), float(raw[1])
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: pair entries must be numbers, got {raw!r}")
    if s < 0.0:
        raise SchemaError(f"{where}: s must be >= 0, got {s}")
    if sigma < 0.0:
        raise SchemaError(f"{where}: sigma must be >= 0, got {sigma}")
    return (s, sigma)


def _parse_material(doc, where):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a mapping, got {type(doc).__name__}")
    known = {"name", "mu_rl_db", "aliases", *PAIR_KEYS}
    for key in doc:
        if key not in known:
            raise SchemaError(f"{where}: unknown key {key!r}")
    if "name" not in doc:
        raise SchemaError(f"{where}: missing required key 'name'")
    name = str(doc["name"])
    if "mu_rl_db" not in doc:
        raise SchemaError(f"{where} ({name}): missing required key 'mu_rl_db'")
    try:
        mu_rl = float(doc["mu_rl_db"])
    except (TypeError, ValueError):
        raise SchemaError(f"{where} ({name}): mu_rl_db must be a number")
    if mu_rl < 0.0:
        raise SchemaError(f"{where} ({name}): mu_rl_db must be >= 0, got {mu_rl}")
    pairs = {}
    for key in PAIR_KEYS:
        if key not in doc:
            raise SchemaError(f"{where} ({name}): missing required key {key!r}")
        pairs[key] = _parse_pair(doc[key], f"{where} ({name}).{key}")
    aliases = doc.get("aliases", ())
    if aliases is None:
        aliases = ()
    if not isinstance(aliases, (list, tuple)):
        raise SchemaError(f"{where} ({name}): aliases must be a list")
    return MaterialParams(name=name, mu_rl_db=mu_rl,
                          aliases=tuple(str(a) for a in aliases), **pairs)


def load_library(source, fallbacks=None):
    """Parse a material library from YAML text, a path, or an open file."""
    if isinstance(source, (str, Path)) and "\n" not in str(source) and os.path.exists(source):
        text = Path(source).read_text(encoding="utf-8")
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"material library is not valid YAML: {exc}")
    if doc is None:
        doc = []
    if not isinstance(doc, list):
        raise SchemaError("material library must be a top-level list of materials")
    mats = [_parse_material(entry, f"materials[{i}]") for i, entry in enumerate(doc)]
    return MaterialLibrary(mats, fallbacks)


def serialize_library(library):
    """Render a library back to YAML parseable by :func:`load_library`."""
    entries = []
    for m in library.materials.values():
        entry = {"name": m.name}
        if m.aliases:
            entry["aliases"] = list(m.aliases)
        entry["mu_rl_db"] = m.mu_rl_db
        for key in PAIR_KEYS:
            entry[key] = list(getattr(m, key))
        entries.append(entry)
    return yaml.safe_dump(entries, sort_keys=False)


def library_search_dirs():
    dirs = []
    env = os.environ.get(MATLIB_PATH_ENV)
    if env:
        dirs.extend(Path(p) for p in env.split(os.pathsep) if p)
    return dirs


def load_named_library(name, fallbacks=None):
    """Load a library by file path, search-path name, or bundled name."""
    p = Path(name)
    if p.suffix == "" and not p.exists():
        p = p.with_suffix(".matlib")
    if p.exists():
        return load_library(p, fallbacks)
    for d in library_search_dirs():
        cand = d / p.name
        if cand.exists():
            return load_library(cand, fallbacks)
    bundle = importlib.resources.files("qdchan.data") / p.name
    if bundle.is_file():
        return load_library(bundle.read_text(encoding="utf-8"), fallbacks)
    raise MaterialLookupError(
        f"no material library named {name!r} found on disk, in "
        f"${MATLIB_PATH_ENV}, or bundled")


def lecture_room_library(fallbacks=None):
    """The bundled lecture-room library (six characterized surfaces)."""
    if fallbacks is None:
        fallbacks = {"Floor": "Ceiling"}
    return load_named_library("lecture_room", fallbacks)
