"""INI experiment configuration.

Sections and keys (all optional)::

    [density]     name
    [model]       degrees, level, refine_l, h
    [collection]  j_min, j_max, isotropic, mode
    [penalty]     a
    [experiment]  estimator, n, reps, grid

Vectors are comma separated. ``n`` also accepts ``2^a..2^b`` for a
power-of-two grid.
"""
from __future__ import annotations

import configparser
from dataclasses import replace

from .experiment import ExperimentConfig

SECTIONS = ("density", "model", "collection", "penalty", "experiment")


def parse_ints(text: str) -> tuple:
    text = text.strip()
    if ".." in text and text.startswith("2^"):
        lo, hi = text.split("..")
        a, b = int(lo[2:]), int(hi.strip()[2:])
        return tuple(2**k for k in range(a, b + 1))
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def config_from_parser(cp: configparser.ConfigParser) -> ExperimentConfig:
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections {sorted(unknown)}")
    kw = {}
    get = lambda sec, key: cp.get(sec, key, fallback=None)
    if get("density", "name"):
        kw["density"] = get("density", "name")
    if get("model", "degrees"):
        kw["degrees"] = parse_ints(get("model", "degrees"))
    if get("model", "level"):
        kw["level"] = parse_ints(get("model", "level"))
    if get("model", "refine_l"):
        kw["refine_l"] = int(get("model", "refine_l"))
    if get("model", "h"):
        kw["h"] = float(get("model", "h"))
    if get("collection", "j_min"):
        kw["j_min"] = parse_ints(get("collection", "j_min"))
    if get("collection", "j_max"):
        kw["j_max"] = parse_ints(get("collection", "j_max"))
    if get("collection", "isotropic"):
        kw["isotropic"] = cp.getboolean("collection", "isotropic")
    if get("collection", "mode"):
        kw["mode"] = get("collection", "mode")
    if get("penalty", "a"):
        kw["a"] = float(get("penalty", "a"))
    if get("experiment", "estimator"):
        kw["estimator"] = get("experiment", "estimator")
    if get("experiment", "n"):
        kw["n_values"] = parse_ints(get("experiment", "n"))
    if get("experiment", "reps"):
        kw["reps"] = int(get("experiment", "reps"))
    if get("experiment", "grid"):
        kw["grid"] = int(get("experiment", "grid"))
    return ExperimentConfig(**kw)


def load_config(path: str | None, **overrides) -> ExperimentConfig:
    """Read an INI file (or start from defaults) and apply non-``None`` overrides."""
    cp = configparser.ConfigParser()
    if path:
        with open(path) as fh:
            cp.read_file(fh)
    cfg = config_from_parser(cp)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg
