"""Command-line interface.

Subcommands:

* ``single``   -- one device: fringe histogram vs. the closed-form density,
  with and without common-mode noise;
* ``pair``     -- two devices: histogram of the half-difference variable;
* ``array``    -- N devices, order-q difference variable;
* ``entangle`` -- the entanglement-protection protocol numbers;
* ``oracle``   -- grid-solver vs. closed-form equivalence report;
* ``scenario`` -- point-mass standoff distances per rejection order (SI units).

Configuration comes from a JSON file (``--config``) with per-flag
overrides.  Histograms and analytic curves are written as CSV (17
significant digits, byte-stable across reruns and worker counts); a
``summary.json`` captures fitted numbers, the config echo and timing.

Exit codes: 0 success; 2 invalid configuration (a named precondition
failed); 3 numerical-contract violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import noisefield, oracle
from .array import ArraySpec
from .entangle import (
    PhaseDistribution,
    average_over_phases,
    device_state,
    local_measurement,
    log_negativity,
    measurement_average_negativity,
    recovered_entanglement,
    tensor_combine,
)
from .errors import ConfigError, ContractError
from .montecarlo import displacement_spread, fit_fringe, run_experiment
from .noisefield import (
    BandlimitedWhite,
    NoiseModel,
    OrnsteinUhlenbeck,
    ShotConstant,
    ZeroProcess,
    displacement_coefficients,
    sample_path,
    solve_standoff_distance,
)
from .wavepacket import (
    InterferometerSpec,
    averaged_pdf,
    matched_spec,
    overlap_time,
    pattern_at_overlap,
    spec_from_pattern_scales,
)

OUT_DIR_ENV = "FRINGEARRAY_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACT = 3


@dataclass
class RunConfig:
    """Everything a run needs; JSON keys mirror the field names."""

    mode: str = "single"
    seed: int = 12345
    shots: int = 200000
    order: int | None = None
    out: str | None = None
    eta_tolerance: float = 1e-6
    workers: int = 1
    # device design (dimensionless units, x0 of device 0 = 1);
    # either (k_x0, sigma_over_x0) or an explicit alpha = [alpha_r, alpha_i]
    k_x0: float = 1e-3
    sigma_over_x0: float = 1e4
    alpha: list = field(default_factory=list)
    devices: int | None = None
    mass_ratios: list = field(default_factory=list)
    spacing: float = 0.1
    path_nodes: int = 33
    noise: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    entangle: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)

    @staticmethod
    def load(path: str | None) -> "RunConfig":
        cfg = RunConfig()
        if path:
            with open(path) as handle:
                data = json.load(handle)
            unknown = set(data) - set(cfg.__dict__)
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            for key, value in data.items():
                setattr(cfg, key, value)
        return cfg


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: str, header, columns) -> None:
    with open(path, "w", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in zip(*columns):
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _write_summary(out_dir: str, summary: dict) -> None:
    with open(os.path.join(out_dir, "summary.json"), "w", newline="\n") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _out_dir(cfg: RunConfig) -> str:
    out = cfg.out or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# device/noise construction (dimensionless mode: hbar = omega = 1, x0(dev0) = 1)


def _build_devices(cfg: RunConfig, n_devices: int) -> ArraySpec:
    base_mass = 0.5  # x0 = sqrt(1 / (2 m)) = 1
    if cfg.alpha:
        ref = InterferometerSpec(
            m=base_mass, omega=1.0, alpha_r=cfg.alpha[0], alpha_i=cfg.alpha[1]
        )
        overlap_time(ref)  # raises for alpha_i = 0 or a negative overlap time
    else:
        ref = spec_from_pattern_scales(cfg.k_x0, cfg.sigma_over_x0, m=base_mass)
    ratios = list(cfg.mass_ratios) or [1.0] * n_devices
    if len(ratios) != n_devices:
        raise ConfigError(
            f"mass_ratios has {len(ratios)} entries for {n_devices} devices"
        )
    devices = []
    for i, ratio in enumerate(ratios):
        if ratio == 1.0:
            dev = InterferometerSpec(
                m=ref.m, omega=ref.omega, alpha_r=ref.alpha_r,
                alpha_i=ref.alpha_i, hbar=ref.hbar, site=i,
            )
        else:
            dev = matched_spec(ref, base_mass / ratio, site=i)
        devices.append(dev)
    return ArraySpec(devices=tuple(devices), spacing=cfg.spacing)


def _process_from_dict(entry: dict):
    kind = entry.get("kind", "zero")
    if kind == "zero":
        return ZeroProcess()
    if kind == "constant":
        return ShotConstant(mean=entry.get("mean", 0.0), std=entry.get("std", 0.0))
    if kind == "ou":
        return OrnsteinUhlenbeck(tau=entry["tau"], std=entry.get("std", 0.0))
    if kind == "white":
        return BandlimitedWhite(std=entry.get("std", 0.0), hold=entry["hold"])
    raise ConfigError(f"unknown noise kind {kind!r}")


def _build_noise(cfg: RunConfig, spec: ArraySpec) -> NoiseModel:
    noise = cfg.noise or {}
    if "orders" in noise:
        return NoiseModel(tuple(_process_from_dict(e) for e in noise["orders"]))
    sigma_gamma = noise.get("sigma_gamma")
    if sigma_gamma is None and "k_sigma_gamma" in noise:
        sigma_gamma = noise["k_sigma_gamma"] / spec.wavenumber
    if sigma_gamma is None:
        return NoiseModel.zero()
    tk = spec.overlap_time
    if tk <= 0:
        raise ConfigError("sigma_gamma noise needs a positive overlap time")
    # a shot-constant acceleration c displaces by -c t_k^2 / 2
    return NoiseModel.common_mode(ShotConstant(std=2.0 * sigma_gamma / tk**2))


# --------------------------------------------------------------------------
# interference runs (single / pair / array share one engine)


def _run_interference(cfg: RunConfig, out_dir: str) -> dict:
    order = cfg.order if cfg.order is not None else {"single": 0, "pair": 1}.get(cfg.mode, 1)
    n_devices = cfg.devices or order + 1
    spec = _build_devices(cfg, n_devices)
    model = _build_noise(cfg, spec)
    tk = spec.overlap_time
    path_step = tk / max(1, cfg.path_nodes - 1) if tk > 0 else None

    started = time.perf_counter()
    result = run_experiment(
        spec,
        model,
        cfg.shots,
        order,
        cfg.seed,
        path_step=path_step,
        eta_tolerance=cfg.eta_tolerance,
        workers=cfg.workers,
    )
    elapsed = time.perf_counter() - started

    hist = result.histogram
    _write_csv(
        os.path.join(out_dir, "histogram.csv"),
        ["bin_center", "density"],
        [hist.centers, hist.density()],
    )
    for d, dev_hist in enumerate(result.device_histograms):
        _write_csv(
            os.path.join(out_dir, f"device{d}_histogram.csv"),
            ["bin_center", "density"],
            [dev_hist.centers, dev_hist.density()],
        )

    pattern = result.pattern
    grid = hist.centers
    _write_csv(
        os.path.join(out_dir, "analytic_pattern.csv"),
        ["x", "density"],
        [grid, pattern(grid)],
    )
    spread = displacement_spread(spec, model, order, path_step)
    averaged = averaged_pdf(pattern, spread.target_std)
    _write_csv(
        os.path.join(out_dir, "analytic_averaged.csv"),
        ["x", "density"],
        [grid, averaged(grid)],
    )

    fit = fit_fringe(hist, k_hint=pattern.k)
    empirical = hist.density()
    analytic = averaged(grid)
    summary = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "shots": cfg.shots,
        "order": order,
        "devices": n_devices,
        "pattern": {
            "a": pattern.a,
            "sigma": pattern.sigma,
            "k": pattern.k,
            "visibility": pattern.visibility,
        },
        "etas": [list(step) for step in result.etas],
        "displacement_std_target": spread.target_std,
        "fit": {
            "visibility": fit.visibility,
            "wavenumber": fit.wavenumber,
            "sigma": fit.sigma,
            "center": fit.center,
            "residual_norm": fit.residual_norm,
        },
        "analytic_vs_empirical": {
            "linf": float(np.max(np.abs(empirical - analytic))),
            "l1": float(np.sum(np.abs(empirical - analytic) * hist.widths)),
        },
        "timing_seconds": elapsed,
        "config": asdict(cfg),
    }
    print(
        f"{cfg.mode}: shots={cfg.shots} order={order} "
        f"fitted visibility={fit.visibility:.4f} "
        f"(pattern 1/a={pattern.visibility:.4f}, "
        f"averaged prediction={averaged.visibility:.3e})"
    )
    return summary


# --------------------------------------------------------------------------
# entanglement protocol report


def _phase_dist(entry, default_kind: str = "uniform") -> PhaseDistribution:
    if entry is None:
        entry = {}
    if isinstance(entry, str):
        entry = {"kind": entry}
    kind = entry.get("kind", default_kind)
    if kind == "uniform":
        return PhaseDistribution.uniform(shared=entry.get("shared", True))
    if kind == "gaussian":
        return PhaseDistribution.gaussian(
            sigma=entry.get("sigma", 0.0),
            center=entry.get("center", 0.0),
            shared=entry.get("shared", True),
        )
    if kind == "point":
        return PhaseDistribution.point(entry.get("value", 0.0))
    raise ConfigError(f"unknown phase distribution kind {kind!r}")


def _run_entangle(cfg: RunConfig, out_dir: str) -> dict:
    opts = cfg.entangle or {}
    copies = int(opts.get("copies", 2))
    phi = _phase_dist(opts.get("phi"))
    dphi = _phase_dist(opts.get("dphi", {"kind": "point", "value": 0.0}))
    started = time.perf_counter()

    bell = device_state(1, 0.0, 0.0)
    en_bell = log_negativity(bell)
    en_single = recovered_entanglement(1, PhaseDistribution.uniform())

    def pair_family(p, d):
        return tensor_combine([device_state(1, p, d), device_state(2, p, d)])

    pair_avg = average_over_phases(pair_family, PhaseDistribution.uniform())
    en_pair = log_negativity(pair_avg)
    meas = local_measurement(pair_avg)
    p2 = meas.probabilities[1]
    post = meas.post_states[1]
    en_post = log_negativity(post) if post is not None else 0.0
    recovered = recovered_entanglement(copies, phi, dphi)
    elapsed = time.perf_counter() - started
    summary = {
        "mode": "entangle",
        "copies": copies,
        "log_negativity": {
            "bell_pair": en_bell,
            "single_device_uniform": en_single,
            "two_devices_shared_uniform": en_pair,
            "requested": recovered,
        },
        "pair_measurement": {
            "outcome2_probability": p2,
            "outcome2_post_negativity": en_post,
            "average_post_negativity": measurement_average_negativity(pair_avg),
        },
        "timing_seconds": elapsed,
        "config": asdict(cfg),
    }
    print(
        f"entangle: E_N(bell)={en_bell:.6f} E_N(pair avg)={en_pair:.6f} "
        f"p(outcome 2)={p2:.4f} E_N(post)={en_post:.6f} "
        f"E_N({copies} copies)={recovered:.6f}"
    )
    return summary


# --------------------------------------------------------------------------
# oracle equivalence report


def _run_oracle(cfg: RunConfig, out_dir: str) -> dict:
    opts = cfg.oracle or {}
    alpha = opts.get("alpha", [-2.0, 1.0])
    n_paths = int(opts.get("paths", 3))
    points = int(opts.get("points", oracle.REFERENCE_POINTS))
    tau = float(opts.get("tau", 0.5))
    noise_std = float(opts.get("noise_std", 1.0))
    spec = InterferometerSpec(m=1.0, omega=1.0, alpha_r=alpha[0], alpha_i=alpha[1])
    tk = overlap_time(spec)
    dx = oracle.default_grid_spacing(spec)
    min_steps = int(
        math.ceil(tk * spec.hbar * (math.pi / dx) ** 2 / (2 * spec.m) / (math.pi / 4))
    )
    steps = int(opts.get("steps", 0)) or max(4096, min_steps)
    pattern = pattern_at_overlap(spec)
    model = NoiseModel.common_mode(OrnsteinUhlenbeck(tau=tau, std=noise_std))

    started = time.perf_counter()
    rows = []
    first_curves = None
    for idx in range(n_paths):
        path = sample_path(model, tk, tk / steps, seed=cfg.seed, shot=idx)
        state = oracle.prepare_cat(spec, n_points=points, dx=dx)
        state = oracle.evolve_split_step(state, path, tk, steps)
        xg = displacement_coefficients(path, tk)[0]
        analytic = pattern.shifted(xg)(state.x)
        analytic /= analytic.sum() * state.dx
        grid_density = state.density()
        dist = oracle.compare_distributions(state.x, grid_density, analytic)
        centroid = state.centroid()
        rows.append(
            {
                "path": idx,
                "x_gamma": xg,
                "centroid": centroid,
                "centroid_rel_err": abs(centroid - xg) / abs(xg) if xg else 0.0,
                "l1": dist.l1,
                "linf": dist.linf,
                "ks": dist.ks,
            }
        )
        if first_curves is None:
            first_curves = (state.x, grid_density, analytic)
    elapsed = time.perf_counter() - started

    x, grid_density, analytic = first_curves
    keep = np.abs(x - rows[0]["x_gamma"]) <= 10 * pattern.sigma
    _write_csv(
        os.path.join(out_dir, "oracle_densities.csv"),
        ["x", "grid_density", "analytic_density"],
        [x[keep], grid_density[keep], analytic[keep]],
    )
    summary = {
        "mode": "oracle",
        "paths": rows,
        "steps": steps,
        "points": points,
        "max_l1": max(r["l1"] for r in rows),
        "max_centroid_rel_err": max(r["centroid_rel_err"] for r in rows),
        "timing_seconds": elapsed,
        "config": asdict(cfg),
    }
    print(
        f"oracle: {n_paths} path(s), max L1={summary['max_l1']:.3e}, "
        f"max centroid rel err={summary['max_centroid_rel_err']:.3e}"
    )
    return summary


# --------------------------------------------------------------------------
# point-mass scenario


def _run_scenario(cfg: RunConfig, out_dir: str) -> dict:
    opts = cfg.scenario or {}
    mass = float(opts.get("mass_kg", 1.0))
    spacing = float(opts.get("spacing_m", 0.1))
    delta_a = float(opts.get("delta_a", 6.67e-17))
    orders = list(opts.get("orders", [0, 1, 2]))
    started = time.perf_counter()
    distances = {}
    for q in orders:
        r = solve_standoff_distance(mass, spacing, int(q), delta_a)
        distances[str(q)] = r
        print(f"scenario: order {q}: R = {r:.2f} m (mass {mass} kg, h = {spacing} m)")
    summary = {
        "mode": "scenario",
        "mass_kg": mass,
        "spacing_m": spacing,
        "delta_a": delta_a,
        "standoff_m": distances,
        "reference_acceleration": noisefield.newtonian_acceleration(
            noisefield.PointMassSource(mass, 1000.0)
        ),
        "timing_seconds": time.perf_counter() - started,
        "config": asdict(cfg),
    }
    return summary


# --------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fringearray",
        description="Interference-pattern recovery for interferometer arrays",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("single", "pair", "array", "entangle", "oracle", "scenario"):
        p = sub.add_parser(mode)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--order", type=int)
        p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")
        p.add_argument("--tolerance-eta", type=float, dest="eta_tolerance")
        p.add_argument("--workers", type=int)
    return parser


def run(config: RunConfig) -> int:
    out_dir = _out_dir(config)
    runner = {
        "single": _run_interference,
        "pair": _run_interference,
        "array": _run_interference,
        "entangle": _run_entangle,
        "oracle": _run_oracle,
        "scenario": _run_scenario,
    }[config.mode]
    summary = runner(config, out_dir)
    _write_summary(out_dir, summary)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        cfg.mode = args.mode
        for key in ("seed", "shots", "order", "out", "eta_tolerance", "workers"):
            value = getattr(args, key, None)
            if value is not None:
                setattr(cfg, key, value)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
