"""Experiment harness: seeded, archival runs of every analysis in the package.

Each subcommand writes one JSON summary (validating against
``data/summary.schema.json``) plus CSV files where the experiment produces a
series.  The summary embeds the fully resolved configuration, so identical
configuration and seed give byte-identical files.

Configuration precedence is CLI flag > config file > built-in default.  A
config file is plain ``key = value`` lines using the long option names
(``#`` comments allowed); every summary's embedded config round-trips
through that form.  COCYCLELAB_OUTDIR sets the default output directory.

Exit codes: 0 success, 2 invalid configuration, 3 the experiment finished
but the verdict is inconclusive (or a challenge ladder is not internally
consistent), 4 runtime failure such as an exhausted return-time cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .cobound import (
    SkewProductSystem,
    VERDICT_INCONCLUSIVE,
    catmap_challenge,
    classify_coboundary,
    cohomology_rank_finite,
    ergodicity_report_to_json,
    solve_coboundary_finite,
    stepin_test,
)
from .cohomo2d import Action2D, cohomology_dims, d1, solve_curl
from .dynsys import GOLDEN_MEAN, CatMap, FinitePermutation, TorusRotation
from .induced import (
    CapExceededError,
    InducedSystem,
    SamplingError,
    return_stats_summary,
    return_stats_to_csv,
    return_time_stats,
    ta2_ergodicity_experiment,
)
from .msets import (
    FiniteSet,
    GridSet,
    IntervalUnion,
    _bits_to_hex,
    _hex_to_bits,
    grid_box,
    measure,
    rational_union,
    set_to_json,
)
from .spectral import (
    LABEL_CONTINUOUS,
    LABEL_INCONCLUSIVE,
    LABEL_POINT,
    WM_CONTINUOUS_MAX,
    WM_POINT_MIN,
    autocorrelation,
    correlation_to_csv,
    density_to_csv,
    fiber_sign,
    spectral_density,
    torus_character,
    wiener_statistic,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_RUNTIME = 4

OUTDIR_ENV = "COCYCLELAB_OUTDIR"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# option tables: (name, type, default, help); precedence CLI > file > default


def _parse_int(text) -> int:
    if isinstance(text, int):
        return text
    try:
        return int(str(text), 0)
    except ValueError:
        return int(float(text))


def _parse_flag(text) -> bool:
    if isinstance(text, bool):
        return text
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CONVERT = {"int": _parse_int, "float": float, "str": str, "flag": _parse_flag}

_COMMON = [
    ("seed", "int", 0, "experiment seed"),
    ("out", "str", "", "summary JSON path (default <outdir>/<subcommand>.json)"),
]

_OPTIONS = {
    "finite-cohomology": [
        ("perm", "str", None, "permutation image list, e.g. 1,0,3,2"),
        ("set", "str", "", "optional subset spec (indices:... or bits:...)"),
    ],
    "coboundary": [
        ("system", "str", None, "system spec"),
        ("set", "str", None, "set spec"),
        ("orbit", "int", 1_000_000, "orbit length for statistical classification"),
        ("cells", "int", 64, "spatial cells for the chi-square test"),
    ],
    "stepin": [
        ("system", "str", None, "system spec"),
        ("set", "str", None, "set spec driving the skew product"),
        ("orbit", "int", 1_000_000, "orbit length"),
        ("cells", "int", 64, "spatial cells"),
    ],
    "induced": [
        ("system", "str", None, "system spec"),
        ("set", "str", None, "set inducing the first-return map"),
        ("samples", "int", 100_000, "return-time samples"),
        ("cap", "int", 0, "return-time cap (0 = automatic)"),
        ("orbit", "int", 250_000, "orbit length for the squared-map test"),
        ("cells", "int", 64, "spatial cells for the squared-map test"),
    ],
    "spectrum": [
        ("system", "str", None, "system spec"),
        ("set", "str", "", "set spec (needed by --skew / --induced-map)"),
        ("observable", "str", "char:1", "observable: char:k[,k2] or fiber-sign"),
        ("skew", "flag", False, "analyze the two-point skew extension"),
        ("induced-map", "flag", False, "analyze the first-return map"),
        ("orbit", "int", 1_000_000, "orbit length"),
        ("lags", "int", 4096, "correlation lags"),
        ("bins", "int", 64, "frequency bins for the density estimate"),
        ("keep-mean", "flag", False, "skip empirical mean removal"),
    ],
    "lattice2d": [
        ("grid", "str", None, "torus grid size, e.g. 8x8"),
        ("curl", "str", "", "curl data: hex bits, or 'random' (seeded)"),
    ],
    "catmap-challenge": [
        ("a", "float", 0.5, "box side along the first coordinate"),
        ("b", "float", 0.5, "box side along the second coordinate"),
        ("resolutions", "str", "8,16,32,64,128", "grid resolution ladder"),
        ("orbit-factor", "int", 100, "stepin orbit length per probed cycle element"),
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cocyclelab",
        description="coboundary, induced-map, spectral and lattice experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand")
    for sub, options in _OPTIONS.items():
        sp = subs.add_parser(sub)
        sp.add_argument("--config", default=None, help="key = value config file")
        for name, typ, _default, help_text in options + _COMMON:
            flag = f"--{name}"
            if typ == "flag":
                sp.add_argument(
                    flag, action="store_const", const=True, default=None, help=help_text
                )
            else:
                sp.add_argument(
                    flag, type=_CONVERT[typ], default=None, help=help_text
                )
    return parser


def _read_config_file(path: str) -> dict:
    table = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, val = line.split("=", 1)
                table[key.strip().replace("-", "_")] = val.strip()
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    return table


def _resolve_config(args: argparse.Namespace) -> dict:
    sub = args.subcommand
    table = _read_config_file(args.config) if args.config else {}
    cfg = {}
    for name, typ, default, _help in _OPTIONS[sub] + _COMMON:
        dest = name.replace("-", "_")
        value = getattr(args, dest)
        if value is None and dest in table:
            value = _CONVERT[typ](table[dest])
        if value is None:
            value = default
        if value is None:
            raise ConfigError(f"missing required option --{name}")
        cfg[dest] = value
    unknown = set(table) - {n.replace("-", "_") for n, *_ in _OPTIONS[sub] + _COMMON}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if not cfg["out"]:
        outdir = os.environ.get(OUTDIR_ENV, ".")
        cfg["out"] = os.path.join(outdir, f"{sub}.json")
    return cfg


# ---------------------------------------------------------------------------
# system / set / observable specs


def parse_system(spec: str):
    kind, _, rest = spec.partition(":")
    try:
        if kind == "rotation":
            if rest == "golden":
                return TorusRotation(GOLDEN_MEAN)
            parts = tuple(float(v) for v in rest.split(","))
            return TorusRotation(parts[0] if len(parts) == 1 else parts)
        if kind == "catmap" and not rest:
            return CatMap()
        if kind == "perm":
            return FinitePermutation([int(v) for v in rest.split(",")])
    except ValueError as err:
        raise ConfigError(f"bad system spec {spec!r}: {err}") from err
    raise ConfigError(f"bad system spec {spec!r}")


def parse_set(spec: str, system=None):
    kind, _, rest = spec.partition(":")
    try:
        if kind == "interval":
            lo, hi = (float(v) for v in rest.split(","))
            return IntervalUnion([(lo, hi)])
        if kind == "intervals":
            pairs = [
                tuple(float(v) for v in part.split(",")) for part in rest.split(";")
            ]
            return IntervalUnion(pairs)
        if kind == "rational":
            den, _, cells = rest.partition(":")
            return rational_union(int(den), [int(v) for v in cells.split(",")])
        if kind == "gridbox":
            n, _, sides = rest.partition(":")
            parts = [float(v) for v in sides.split(",")]
            return grid_box(int(n), *parts)
        if kind == "grid":
            n, d, hexstr = rest.split(":")
            n, d = int(n), int(d)
            return GridSet(n, d, _hex_to_bits(hexstr, n**d))
        if kind in ("indices", "bits"):
            if not isinstance(system, FinitePermutation):
                raise ConfigError(f"{kind}: sets need a finite permutation system")
            if kind == "indices":
                idx = [int(v) for v in rest.split(",")] if rest else []
                return FiniteSet.from_indices(system.n, idx)
            return FiniteSet(system.n, _hex_to_bits(rest, system.n))
    except ConfigError:
        raise
    except (ValueError, TypeError) as err:
        raise ConfigError(f"bad set spec {spec!r}: {err}") from err
    raise ConfigError(f"bad set spec {spec!r}")


def parse_observable(spec: str, mean_removed: bool):
    kind, _, rest = spec.partition(":")
    if kind in ("fiber", "fiber-sign"):
        return fiber_sign(mean_removed)
    if kind == "char":
        try:
            freqs = [int(v) for v in rest.split(",")]
        except ValueError as err:
            raise ConfigError(f"bad observable spec {spec!r}: {err}") from err
        return torus_character(freqs[0] if len(freqs) == 1 else freqs, mean_removed)
    raise ConfigError(f"bad observable spec {spec!r}")


# ---------------------------------------------------------------------------
# subcommand handlers: cfg -> (results, headline, exit code)


def _stem(cfg: dict) -> str:
    out = cfg["out"]
    return out[:-5] if out.endswith(".json") else out


def _run_finite_cohomology(cfg):
    perm = FinitePermutation([int(v) for v in cfg["perm"].split(",")])
    k, dim = cohomology_rank_finite(perm)
    results = {"n": perm.n, "k": k, "coboundary_dim": dim}
    headline = f"k={k} coboundary_dim={dim}"
    if cfg["set"]:
        cert = solve_coboundary_finite(perm, parse_set(cfg["set"], perm))
        results["solvable"] = cert.solvable
        results["witness"] = set_to_json(cert.witness) if cert.solvable else None
        results["obstruction"] = [list(pair) for pair in cert.obstruction]
        headline += f" solvable={cert.solvable}"
    return results, headline, EXIT_OK


def _run_coboundary(cfg):
    system = parse_system(cfg["system"])
    a = parse_set(cfg["set"], system)
    if isinstance(system, FinitePermutation):
        cert = solve_coboundary_finite(system, a)
        results = {
            "mode": "exact",
            "solvable": cert.solvable,
            "witness": set_to_json(cert.witness) if cert.solvable else None,
            "obstruction": [list(pair) for pair in cert.obstruction],
        }
        return results, f"solvable={cert.solvable}", EXIT_OK
    outcome = classify_coboundary(
        system, a, orbit_length=cfg["orbit"], cells=cfg["cells"], seed=cfg["seed"]
    )
    results = {
        "mode": "statistical",
        "verdict": outcome.verdict,
        "report": ergodicity_report_to_json(outcome.report),
    }
    code = EXIT_INCONCLUSIVE if outcome.verdict == VERDICT_INCONCLUSIVE else EXIT_OK
    return results, outcome.verdict, code


def _run_stepin(cfg):
    system = parse_system(cfg["system"])
    a = parse_set(cfg["set"], system)
    report = stepin_test(
        system, a, orbit_length=cfg["orbit"], cells=cfg["cells"], seed=cfg["seed"]
    )
    results = ergodicity_report_to_json(report)
    code = EXIT_INCONCLUSIVE if report.verdict == VERDICT_INCONCLUSIVE else EXIT_OK
    return results, report.verdict, code


def _run_induced(cfg):
    system = parse_system(cfg["system"])
    a = parse_set(cfg["set"], system)
    cap = cfg["cap"] or None
    stats = return_time_stats(
        system, a, samples=cfg["samples"], cap=cap, seed=cfg["seed"]
    )
    csv_path = _stem(cfg) + "-returns.csv"
    return_stats_to_csv(stats, csv_path)
    ta2 = ta2_ergodicity_experiment(
        system, a, orbit_length=cfg["orbit"], cells=cfg["cells"], seed=cfg["seed"]
    )
    mass = measure(a)
    results = {
        "returns": return_stats_summary(stats),
        "measure": mass,
        "kac_expected_mean": 1.0 / mass if mass > 0 else None,
        "squared_map": ergodicity_report_to_json(ta2),
        "returns_csv": os.path.basename(csv_path),
    }
    headline = f"mean_return={stats.mean:.4f} squared_map={ta2.verdict}"
    code = EXIT_INCONCLUSIVE if ta2.verdict == VERDICT_INCONCLUSIVE else EXIT_OK
    return results, headline, code


def _run_spectrum(cfg):
    system = parse_system(cfg["system"])
    if cfg["skew"] and cfg["induced_map"]:
        raise ConfigError("--skew and --induced-map are mutually exclusive")
    if cfg["skew"] or cfg["induced_map"]:
        if not cfg["set"]:
            raise ConfigError("--skew / --induced-map need --set")
        a = parse_set(cfg["set"], system)
        system = (
            SkewProductSystem(system, a) if cfg["skew"] else InducedSystem(system, a)
        )
    obs = parse_observable(cfg["observable"], mean_removed=not cfg["keep_mean"])
    cs = autocorrelation(
        system, obs, orbit_length=cfg["orbit"], lags=cfg["lags"], seed=cfg["seed"]
    )
    wm = wiener_statistic(cs)
    if wm < WM_CONTINUOUS_MAX:
        label = LABEL_CONTINUOUS
    elif wm > WM_POINT_MIN:
        label = LABEL_POINT
    else:
        label = LABEL_INCONCLUSIVE
    est = spectral_density(cs, cfg["bins"])
    corr_path = _stem(cfg) + "-correlations.csv"
    dens_path = _stem(cfg) + "-density.csv"
    correlation_to_csv(cs, corr_path)
    density_to_csv(est, dens_path)
    results = {
        "observable": obs.label(),
        "c0": float(cs.c[0].real),
        "wm": wm,
        "classification": label,
        "lags": cs.lags,
        "orbit_length": cs.orbit_length,
        "bins": est.bins,
        "total_mass": est.total_mass,
        "peak_bin": int(np.argmax(est.density)),
        "peak_mass": float(est.density.max()),
        "correlations_csv": os.path.basename(corr_path),
        "density_csv": os.path.basename(dens_path),
    }
    headline = f"wm={wm:.4g} {label}"
    code = EXIT_INCONCLUSIVE if label == LABEL_INCONCLUSIVE else EXIT_OK
    return results, headline, code


def _parse_grid(text: str) -> tuple[int, int]:
    for sep in ("x", "X", ","):
        if sep in text:
            m, n = text.split(sep)
            return int(m), int(n)
    raise ConfigError(f"bad grid spec {text!r} (expected MxN)")


def _run_lattice2d(cfg):
    m, n = _parse_grid(cfg["grid"])
    action = Action2D.torus_grid(m, n)
    dims = cohomology_dims(action)
    results = {"grid": [m, n], "dims": list(dims)}
    headline = f"dims={dims}"
    if cfg["curl"]:
        if cfg["curl"] == "random":
            rng = np.random.default_rng(cfg["seed"])
            f = rng.integers(0, 2, size=m * n).astype(np.uint8)
        else:
            f = _hex_to_bits(cfg["curl"], m * n)
        solution = solve_curl(action, f)
        curl_results = {
            "cells": int(m * n),
            "hex": _bits_to_hex(f),
            "parity": int(f.sum() & 1),
            "solvable": solution is not None,
        }
        if solution is not None:
            p, q = solution
            if not np.array_equal(d1(action, p, q), f):
                raise RuntimeError("curl solution failed verification")
            curl_results["p"] = _bits_to_hex(p)
            curl_results["q"] = _bits_to_hex(q)
        results["curl"] = curl_results
        headline += f" curl_solvable={curl_results['solvable']}"
    return results, headline, EXIT_OK


def _run_catmap_challenge(cfg):
    resolutions = tuple(_parse_int(v) for v in cfg["resolutions"].split(","))
    outcome = catmap_challenge(
        a=cfg["a"],
        b=cfg["b"],
        resolutions=resolutions,
        seed=cfg["seed"],
        orbit_factor=cfg["orbit_factor"],
    )
    headline = (
        f"solvable_by_resolution={outcome['solvable_by_resolution']} "
        f"all_consistent={outcome['all_consistent']}"
    )
    code = EXIT_OK if outcome["all_consistent"] else EXIT_INCONCLUSIVE
    return outcome, headline, code


_HANDLERS = {
    "finite-cohomology": _run_finite_cohomology,
    "coboundary": _run_coboundary,
    "stepin": _run_stepin,
    "induced": _run_induced,
    "spectrum": _run_spectrum,
    "lattice2d": _run_lattice2d,
    "catmap-challenge": _run_catmap_challenge,
}


# ---------------------------------------------------------------------------
# entry point


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def write_summary(path: str, payload: dict) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _resolve_config(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        results, headline, code = _HANDLERS[args.subcommand](cfg)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"error: invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapExceededError, SamplingError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    payload = {
        "tool": "cocyclelab",
        "version": __version__,
        "subcommand": args.subcommand,
        "seed": cfg["seed"],
        "config": cfg,
        "results": results,
    }
    write_summary(cfg["out"], payload)
    print(f"{args.subcommand}: {headline}")
    print(f"summary: {cfg['out']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
