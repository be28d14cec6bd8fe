"""Declarative configuration of marked groups, wreath products, and runs.

The format is INI (one ``[group <name>]`` or ``[wreath <name>]`` section per
structure, plus one optional ``[experiment]`` section for run parameters).
Element literals use each kind's text form: plain integers for the integer,
cyclic, and table kinds; letter words like ``abA`` (capitals are inverses,
``e`` the identity) for free groups; ``(left|right)`` pairs for products.
Lists are whitespace-separated.  Radii accept integers, fractions like
``5/2``, and inclusive integer ranges like ``1..6``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import ConfigError, EncodingError, StructureError
from .groups import (
    CyclicGroup,
    FreeGroup,
    IntegerGroup,
    MarkedGroup,
    ProductGroup,
    TableGroup,
    VirtuallyZGroup,
    VirtuallyZStructure,
)
from .wreath import WreathContext

DEFAULT_BUDGET = 10_000_000

#: Configuration equivalent to what `wreathdim verify` uses with no --config.
DEFAULT_CONFIG = """\
# Marked groups and wreath products for the built-in verification suite.
# Element literals: integers for integer/cyclic/table kinds, letter words
# (capitals = inverses) for free groups, (left|right) pairs for products.

[experiment]
radii = 1..6
format = json
budget = 10000000
workers = 1
seed = 0

[group Z]
kind = integers
generators = 1
# infinite cyclic structure: t = 1, one coset rep, no distortion
vz_t = 1
vz_reps = 0
vz_distortion = 1

[group C2]
kind = cyclic
modulus = 2

[group C3]
kind = cyclic
modulus = 3

[group F2]
kind = free
rank = 2

[group Z2]
kind = product
left = Z
right = Z

[group ZxC2]
kind = product
left = Z
right = C2
vz_t = (1|0)
vz_reps = (0|0) (0|1)
vz_distortion = 1

[wreath L2]
fiber = C2
base = Z

[wreath W2]
fiber = C2
base = Z2
"""


@dataclass
class ExperimentSetup:
    """Everything a run needs: structures plus experiment parameters."""

    groups: dict[str, MarkedGroup] = field(default_factory=dict)
    wreaths: dict[str, WreathContext] = field(default_factory=dict)
    structures: dict[str, VirtuallyZStructure] = field(default_factory=dict)
    radii: tuple[Fraction, ...] = ()
    out_format: str = "json"
    cache_dir: str | None = None
    budget: int = DEFAULT_BUDGET
    workers: int = 1
    seed: int = 0
    checks: tuple[str, ...] | None = None

    def context(self, name: str):
        """Look up a group or wreath context by declared name."""
        if name in self.wreaths:
            return self.wreaths[name]
        if name in self.groups:
            return self.groups[name]
        raise ConfigError(f"no group or wreath named {name!r} is declared")


def parse_radii(text: str) -> tuple[Fraction, ...]:
    out: list[Fraction] = []
    for item in text.replace(",", " ").split():
        if ".." in item:
            lo_text, _, hi_text = item.partition("..")
            try:
                lo, hi = int(lo_text), int(hi_text)
            except ValueError:
                raise ConfigError(f"bad radius range {item!r}; expected like 1..6") from None
            if hi < lo:
                raise ConfigError(f"empty radius range {item!r}")
            out.extend(Fraction(v) for v in range(lo, hi + 1))
        else:
            try:
                out.append(Fraction(item))
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"bad radius {item!r}") from None
    for r in out:
        if r <= 0:
            raise ConfigError(f"radius must be positive, got {r}")
    return tuple(out)


_KIND_KEYS = {
    "integers": {"kind", "generators", "vz_t", "vz_reps", "vz_distortion"},
    "cyclic": {"kind", "modulus", "generators", "vz_t", "vz_reps", "vz_distortion"},
    "free": {"kind", "rank", "generators", "vz_t", "vz_reps", "vz_distortion"},
    "table": {"kind", "table", "generators", "vz_t", "vz_reps", "vz_distortion"},
    "product": {"kind", "left", "right", "generators", "vz_t", "vz_reps", "vz_distortion"},
    "vz": {"kind", "base"},
}

_EXPERIMENT_KEYS = {"radii", "format", "cache_dir", "budget", "workers", "seed", "checks"}


def _section_int(section: configparser.SectionProxy, name: str, key: str) -> int:
    try:
        return int(section[key])
    except ValueError:
        raise ConfigError(f"[{name}] {key} = {section[key]!r} is not an integer") from None


def _build_group(
    name: str, section: configparser.SectionProxy, groups: dict[str, MarkedGroup]
) -> MarkedGroup | None:
    """Build one group section; None when a product's factors are not ready yet."""
    kind = section.get("kind")
    if kind is None:
        raise ConfigError(f"[group {name}] is missing the key 'kind'")
    allowed = _KIND_KEYS.get(kind)
    if allowed is None:
        raise ConfigError(f"[group {name}] kind = {kind!r} is not a known kind")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"[group {name}] has an unexpected key {key!r} for kind {kind}")
    try:
        if kind == "integers":
            gens_text = section.get("generators", "1")
            return IntegerGroup(tuple(int(g) for g in gens_text.split()))
        if kind == "cyclic":
            if "modulus" not in section:
                raise ConfigError(f"[group {name}] cyclic kind needs the key 'modulus'")
            modulus = _section_int(section, f"group {name}", "modulus")
            gens_text = section.get("generators")
            gens = None if gens_text is None else tuple(int(g) for g in gens_text.split())
            return CyclicGroup(modulus, gens)
        if kind == "free":
            if "rank" not in section:
                raise ConfigError(f"[group {name}] free kind needs the key 'rank'")
            rank = _section_int(section, f"group {name}", "rank")
            proto = FreeGroup(rank)
            gens_text = section.get("generators")
            if gens_text is None:
                return proto
            return FreeGroup(rank, tuple(proto.parse_element(g) for g in gens_text.split()))
        if kind == "table":
            if "table" not in section or "generators" not in section:
                raise ConfigError(f"[group {name}] table kind needs keys 'table' and 'generators'")
            rows = [
                tuple(int(v) for v in row.split())
                for row in section["table"].split(";")
                if row.strip()
            ]
            gens = tuple(int(g) for g in section["generators"].split())
            return TableGroup(rows, gens)
        if kind == "product":
            for key in ("left", "right"):
                if key not in section:
                    raise ConfigError(f"[group {name}] product kind needs the key {key!r}")
            left_name, right_name = section["left"], section["right"]
            if left_name not in groups or right_name not in groups:
                return None  # factor not built yet; retried by the resolution loop
            proto = ProductGroup(groups[left_name], groups[right_name])
            gens_text = section.get("generators")
            if gens_text is None:
                return proto
            return ProductGroup(
                groups[left_name],
                groups[right_name],
                tuple(proto.parse_element(g) for g in gens_text.split()),
            )
        # kind == "vz": wrap an already-declared group through its structure
        if "base" not in section:
            raise ConfigError(f"[group {name}] vz kind needs the key 'base'")
        return None  # resolved in a second pass once structures exist
    except (ValueError, EncodingError, StructureError) as exc:
        raise ConfigError(f"[group {name}]: {exc}") from exc


def _build_structure(
    name: str, section: configparser.SectionProxy, group: MarkedGroup
) -> VirtuallyZStructure | None:
    if "vz_t" not in section:
        for key in ("vz_reps", "vz_distortion"):
            if key in section:
                raise ConfigError(f"[group {name}] has {key} but no vz_t")
        return None
    if "vz_reps" not in section:
        raise ConfigError(f"[group {name}] has vz_t but no vz_reps")
    try:
        t = group.parse_element(section["vz_t"])
        reps = tuple(group.parse_element(r) for r in section["vz_reps"].split())
        distortion = Fraction(section.get("vz_distortion", "1"))
        return VirtuallyZStructure(group, t, reps, distortion)
    except (ValueError, ZeroDivisionError, EncodingError, StructureError) as exc:
        raise ConfigError(f"[group {name}] vz structure: {exc}") from exc


def parse_config(text: str) -> ExperimentSetup:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config is not valid INI: {exc}") from exc

    setup = ExperimentSetup()
    group_sections: dict[str, configparser.SectionProxy] = {}
    wreath_sections: dict[str, configparser.SectionProxy] = {}
    for section_name in parser.sections():
        if section_name == "experiment":
            continue
        words = section_name.split()
        if len(words) != 2 or words[0] not in ("group", "wreath"):
            raise ConfigError(
                f"section [{section_name}] must be [experiment], [group <name>], or [wreath <name>]"
            )
        label, name = words
        if name in group_sections or name in wreath_sections:
            raise ConfigError(f"the name {name!r} is declared twice")
        if label == "group":
            group_sections[name] = parser[section_name]
        else:
            wreath_sections[name] = parser[section_name]

    pending = dict(group_sections)
    while pending:
        built = []
        for name, section in pending.items():
            if section.get("kind") == "vz":
                continue
            group = _build_group(name, section, setup.groups)
            if group is not None:
                setup.groups[name] = group
                built.append(name)
        if not built:
            stuck = [n for n, s in pending.items() if s.get("kind") != "vz"]
            if stuck:
                raise ConfigError(
                    f"[group {stuck[0]}] references groups that are never declared"
                )
            break
        for name in built:
            del pending[name]

    for name, section in group_sections.items():
        if section.get("kind") == "vz":
            continue
        structure = _build_structure(name, section, setup.groups[name])
        if structure is not None:
            setup.structures[name] = structure

    for name, section in pending.items():
        # only vz wrappers remain
        for key in section:
            if key not in _KIND_KEYS["vz"]:
                raise ConfigError(f"[group {name}] has an unexpected key {key!r} for kind vz")
        base_name = section["base"]
        structure = setup.structures.get(base_name)
        if structure is None:
            raise ConfigError(
                f"[group {name}] wraps {base_name!r}, which has no vz structure declared"
            )
        try:
            setup.groups[name] = VirtuallyZGroup(structure)
        except (EncodingError, StructureError) as exc:
            raise ConfigError(f"[group {name}]: {exc}") from exc

    for name, section in wreath_sections.items():
        for key in section:
            if key not in ("fiber", "base"):
                raise ConfigError(f"[wreath {name}] has an unexpected key {key!r}")
        for key in ("fiber", "base"):
            if key not in section:
                raise ConfigError(f"[wreath {name}] needs the key {key!r}")
            if section[key] not in setup.groups:
                raise ConfigError(
                    f"[wreath {name}] {key} = {section[key]!r} is not a declared group"
                )
        try:
            setup.wreaths[name] = WreathContext(
                setup.groups[section["fiber"]], setup.groups[section["base"]]
            )
        except StructureError as exc:
            raise ConfigError(f"[wreath {name}]: {exc}") from exc

    if parser.has_section("experiment"):
        exp = parser["experiment"]
        for key in exp:
            if key not in _EXPERIMENT_KEYS:
                raise ConfigError(f"[experiment] has an unexpected key {key!r}")
        if "radii" in exp:
            setup.radii = parse_radii(exp["radii"])
        if "format" in exp:
            if exp["format"] not in ("json", "csv"):
                raise ConfigError(f"[experiment] format must be json or csv, got {exp['format']!r}")
            setup.out_format = exp["format"]
        if "cache_dir" in exp:
            setup.cache_dir = exp["cache_dir"]
        if "budget" in exp:
            setup.budget = _section_int(exp, "experiment", "budget")
            if setup.budget <= 0:
                raise ConfigError("[experiment] budget must be positive")
        if "workers" in exp:
            setup.workers = _section_int(exp, "experiment", "workers")
            if setup.workers < 1:
                raise ConfigError("[experiment] workers must be >= 1")
        if "seed" in exp:
            setup.seed = _section_int(exp, "experiment", "seed")
        if "checks" in exp:
            setup.checks = tuple(exp["checks"].split())
    return setup


def load_config(path: str) -> ExperimentSetup:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return parse_config(text)


def default_setup() -> ExperimentSetup:
    return parse_config(DEFAULT_CONFIG)
