"""Command-line entry points: lift, genericize, oscillate, markers, normality, suite.

Every command reads a JSON config, resolves a single run seed through named
streams, writes its word and report files under the output directory, and
exits 0 on success, 1 on input errors, 2 when a configured tolerance is
missed.  Reports embed the fully resolved configuration so a run can be
reproduced byte for byte from its own report.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .core import NotMixingError, Sft, Word, word_from_text, word_to_text
from .lift import (
    additive_schedule,
    default_scales,
    genericize,
    geometric_schedule,
    lift_pair,
    marker_sequence,
    oscillation_point,
    relative_generation_distance,
    schedule_from_lengths,
)
from .measures import Bernoulli, EmpiricalTarget, ProductJoining, empirical_measure, parse_target
from .sampling import sample_word, seed_int, stream
from .sequences import Selector, block_entropy, champernowne, normality_deviation, select, sturmian

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TOLERANCE = 2


@dataclass
class RunConfig:
    command: str
    options: dict
    seed: int | str
    out_dir: Path
    depth: int


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _resolve_sft(obj) -> Sft:
    if obj is None:
        return Sft.full_shift(2)
    if isinstance(obj, dict) and "preset" in obj:
        preset = obj["preset"]
        if preset == "full_shift":
            return Sft.full_shift(int(obj.get("size", 2)))
        if preset == "golden_mean":
            return Sft.golden_mean()
        raise ValueError(f"unknown sft preset {preset!r}")
    if isinstance(obj, dict) and "file" in obj:
        with open(obj["file"]) as fh:
            return Sft.from_json(json.load(fh))
    return Sft.from_json(obj)


def _resolve_word(obj, sft: Sft, seed, default_stream: str) -> Word:
    if isinstance(obj, dict) and "file" in obj:
        with open(obj["file"]) as fh:
            return word_from_text(sft.alphabet, fh.read())
    if isinstance(obj, dict) and "generator" in obj:
        gen = obj["generator"]
        length = int(obj["length"])
        if gen == "sturmian":
            return sturmian(length)
        if gen == "champernowne":
            return champernowne(int(obj.get("base", 2)), length)
        if gen == "sample":
            target = parse_target(obj["target"])
            rng = stream(seed, obj.get("stream", default_stream))
            return sample_word(target, length, rng)
        raise ValueError(f"unknown word generator {gen!r}")
    raise ValueError("word source must give a file or a generator")


def _resolve_target(obj, y: Word | None = None):
    """Parse a target; 'driver_empirical' resolves against the driver word."""
    if isinstance(obj, dict) and obj.get("kind") == "driver_empirical":
        if y is None:
            raise ValueError("driver_empirical target needs a driver word")
        depth = int(obj.get("depth", 8))
        return EmpiricalTarget(empirical_measure(y, depth))
    if isinstance(obj, dict) and obj.get("kind") == "product":
        params = obj.get("params", {})
        return ProductJoining(
            _resolve_target(params["first"], y),
            _resolve_target(params["second"], y),
        )
    return parse_target(obj)


def _resolve_schedule(obj, checkpoints, gap, block_alphabet, driver_alphabet):
    obj = obj or {}
    kwargs = dict(
        gap=gap,
        eps1=float(obj.get("eps1", 0.5)),
        tolerances=obj.get("tolerances"),
        block_alphabet=block_alphabet,
        driver_alphabet=driver_alphabet,
    )
    if "block_lengths" in obj:
        return schedule_from_lengths(checkpoints, obj["block_lengths"], **kwargs)
    profile = obj.get("profile", "additive")
    if profile == "geometric":
        return geometric_schedule(checkpoints, l1=int(obj.get("l1", 8)), **kwargs)
    if profile == "additive":
        return additive_schedule(
            checkpoints, l1=int(obj.get("l1", 4)), step=int(obj.get("step", 2)), **kwargs
        )
    raise ValueError(f"unknown schedule profile {profile!r}")


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_word(path: Path, w: Word) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(word_to_text(w))
        fh.write("\n")


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def run_lift(cfg: RunConfig) -> int:
    opts = cfg.options
    sft = _resolve_sft(opts.get("sft"))
    from .core import connection_gap

    g0 = connection_gap(sft).g0
    y = _resolve_word(opts["y"], Sft.full_shift(int(opts.get("driver_alphabet", 2))), cfg.seed, "y")
    mu = _resolve_target(opts["mu"])
    xi = _resolve_target(opts["xi"], y)
    checkpoints = [int(n) for n in opts["checkpoints"]]
    sched = _resolve_schedule(
        opts.get("schedule"), checkpoints, g0, sft.alphabet.size, y.alphabet.size
    )
    scale_floor = int(opts.get("scale_floor", 1024))
    result = lift_pair(
        y, checkpoints, xi, mu, sft, sched,
        depth=cfg.depth,
        input_tol=float(opts.get("input_tol", 0.2)),
        scales=default_scales(checkpoints[-1], scale_floor),
    )
    report = result.report
    resolved = {
        "command": "lift",
        "seed": cfg.seed if isinstance(cfg.seed, int) else str(cfg.seed),
        "depth": cfg.depth,
        "options": opts,
    }
    report.config = resolved
    _write_word(cfg.out_dir / "x.txt", result.word)
    _write_json(cfg.out_dir / "report.json", report.to_json())
    rows = (
        [("scale", n, d) for n, d in report.scale_distances]
        + [("checkpoint", n, d) for n, d in report.checkpoint_distances]
        + [("pair", n, d) for n, d in report.pair_distances]
    )
    _write_rows(cfg.out_dir / "checkpoints.csv", ["kind", "n", "distance"], rows)

    tol = opts.get("tolerances", {})
    ok = True
    if "pair_final" in tol:
        ok &= report.pair_distances[-1][1] <= float(tol["pair_final"])
    if "x_scale" in tol:
        ok &= all(d <= float(tol["x_scale"]) for _, d in report.scale_distances)
    if not ok:
        print("tolerance failure: see report.json", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def run_genericize(cfg: RunConfig) -> int:
    opts = cfg.options
    sft = _resolve_sft(opts.get("sft"))
    x0 = _resolve_word(opts["x0"], sft, cfg.seed, "x0")
    mu = _resolve_target(opts["mu"])
    checkpoints = [int(n) for n in opts["checkpoints"]]
    from .core import connection_gap

    g0 = connection_gap(sft).g0
    sched = _resolve_schedule(
        opts.get("schedule", {"profile": "geometric"}), checkpoints, g0, sft.alphabet.size, 1
    )
    scale_floor = int(opts.get("scale_floor", 1024))
    result = genericize(
        x0, checkpoints, mu, sched, sft,
        depth=cfg.depth,
        input_tol=float(opts.get("input_tol", 0.2)),
        scales=default_scales(checkpoints[-1], scale_floor),
    )
    report = result.report
    report.config = {
        "command": "genericize",
        "seed": cfg.seed if isinstance(cfg.seed, int) else str(cfg.seed),
        "depth": cfg.depth,
        "options": opts,
    }
    _write_word(cfg.out_dir / "x.txt", result.word)
    _write_json(cfg.out_dir / "report.json", report.to_json())
    rows = (
        [("scale", n, d) for n, d in report.scale_distances]
        + [("m_density", n, d) for n, d in report.m_density]
    )
    _write_rows(cfg.out_dir / "checkpoints.csv", ["kind", "n", "value"], rows)

    tol = opts.get("tolerances", {})
    ok = True
    if "distance" in tol:
        ok &= all(d <= float(tol["distance"]) for _, d in report.scale_distances)
    if "m_density" in tol:
        ok &= all(d >= float(tol["m_density"]) for _, d in report.m_density)
    if not ok:
        print("tolerance failure: see report.json", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def run_oscillate(cfg: RunConfig) -> int:
    opts = cfg.options
    sft = _resolve_sft(opts.get("sft"))
    mu = _resolve_target(opts.get("mu", {"kind": "bernoulli", "params": {"probs": [0.5, 0.5]}}))
    nu = _resolve_target(opts.get("nu", {"kind": "bernoulli", "params": {"probs": [1.0, 0.0]}}))
    stages = int(opts.get("stages", 6))
    result = oscillation_point(
        mu, nu, sft, stages,
        seed=cfg.seed,
        base_length=int(opts.get("base_length", 256)),
    )
    payload = result.to_json()
    payload["config"] = {
        "command": "oscillate",
        "seed": cfg.seed if isinstance(cfg.seed, int) else str(cfg.seed),
        "options": opts,
    }
    _write_word(cfg.out_dir / "x.txt", result.word)
    _write_json(cfg.out_dir / "report.json", payload)
    if not all(c.met for c in result.checkpoints):
        print("tolerance failure: an average missed its threshold", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def run_markers(cfg: RunConfig) -> int:
    opts = cfg.options
    count = int(opts.get("count", 10000))
    l_values = [int(v) for v in opts.get("L_values", [1, 2, 3, 5])]
    target = _resolve_target(opts.get("mu", {"kind": "bernoulli", "params": {"probs": [0.5, 0.5]}}))
    tol = float(opts.get("tolerance", 0.02))
    rows = []
    summary = {}
    ok = True
    for L in l_values:
        m = marker_sequence(L, count)
        need = m.markers[-1] + cfg.depth
        rng = stream(cfg.seed, f"markers/L{L}")
        w = sample_word(target, need, rng)
        dist = relative_generation_distance(w, m, target, cfg.depth, count)
        gaps_ok = all(g in (L, L + 1) for g in m.gaps)
        rows.append((L, count, gaps_ok, dist))
        summary[str(L)] = {"gaps_two_valued": gaps_ok, "generation_distance": dist}
        ok &= gaps_ok and dist <= tol
    _write_rows(cfg.out_dir / "markers.csv", ["L", "count", "gaps_ok", "distance"], rows)
    _write_json(cfg.out_dir / "report.json", {
        "config": {
            "command": "markers",
            "seed": cfg.seed if isinstance(cfg.seed, int) else str(cfg.seed),
            "depth": cfg.depth,
            "options": opts,
        },
        "results": summary,
    })
    return EXIT_OK if ok else EXIT_TOLERANCE


def run_normality(cfg: RunConfig) -> int:
    opts = cfg.options
    base = int(opts.get("base", 2))
    w = _resolve_word(opts["word"], Sft.full_shift(base), cfg.seed, "word")
    sel_spec = opts.get("selector")
    if sel_spec:
        if sel_spec.get("kind") == "sturmian":
            sel = Selector(indicator=sturmian(len(w)))
        else:
            indicator = _resolve_word(sel_spec["indicator"], Sft.full_shift(2), cfg.seed, "selector")
            sel = Selector(indicator=indicator)
        w = select(w, sel)
    depth = cfg.depth
    rows = []
    for j in range(1, depth + 1):
        rows.append((j, normality_deviation(w, j), block_entropy(w, j)))
    deviation = normality_deviation(w, depth)
    tol = opts.get("tolerance")
    _write_rows(cfg.out_dir / "normality.csv", ["depth", "deviation", "entropy_rate"], rows)
    _write_json(cfg.out_dir / "report.json", {
        "config": {
            "command": "normality",
            "seed": cfg.seed if isinstance(cfg.seed, int) else str(cfg.seed),
            "depth": depth,
            "options": opts,
        },
        "deviation": deviation,
        "length": len(w),
    })
    if tol is not None and deviation > float(tol):
        print("tolerance failure: normality deviation too large", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


_RUNNERS = {
    "lift": run_lift,
    "genericize": run_genericize,
    "oscillate": run_oscillate,
    "markers": run_markers,
    "normality": run_normality,
}


def run_suite(cfg: RunConfig) -> int:
    manifest = cfg.options.get("runs", [])
    results = {}
    worst = EXIT_OK
    for entry in manifest:
        name = entry["name"]
        command = entry["command"]
        if command not in _RUNNERS:
            print(f"error: unknown command {command!r} in manifest", file=sys.stderr)
            return EXIT_INPUT
        sub = RunConfig(
            command=command,
            options=entry.get("config", {}),
            seed=entry.get("seed", cfg.seed),
            out_dir=cfg.out_dir / name,
            depth=int(entry.get("depth", cfg.depth)),
        )
        try:
            code = _RUNNERS[command](sub)
        except Exception as exc:  # input errors inside sub-runs
            print(f"error in {name}: {exc}", file=sys.stderr)
            code = EXIT_INPUT
        results[name] = code
        worst = max(worst, code)
    _write_json(cfg.out_dir / "summary.json", {
        "runs": results,
        "ok": worst == EXIT_OK,
    })
    return worst


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shiftlift",
        description="generic lifts, shadowing, and normality experiments on shift spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ["lift", "genericize", "oscillate", "markers", "normality", "suite"]:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="path to a JSON config")
        p.add_argument("--seed", default=None, help="64-bit integer or string token")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--depth", type=int, default=None, help="metric truncation depth")
    args = parser.parse_args(argv)

    try:
        options = _load_config(args.config)
        seed = args.seed if args.seed is not None else options.get("seed", 0)
        if isinstance(seed, str) and seed.lstrip("-").isdigit():
            seed = int(seed)
        depth = args.depth if args.depth is not None else int(options.get("depth", 2))
        cfg = RunConfig(
            command=args.command,
            options=options,
            seed=seed,
            out_dir=Path(args.out),
            depth=depth,
        )
        if args.command == "suite":
            return run_suite(cfg)
        return _RUNNERS[args.command](cfg)
    except NotMixingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, TypeError) as exc:
        print(f"error: malformed config ({exc})", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
