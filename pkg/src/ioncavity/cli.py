"""Command-line front end: config ingestion, experiment dispatch, reports.

Subcommands (each takes --config <json>, --out <path>, --jobs <n>):

* truth-table      run the three-pulse CNOT schedule, write a gate report (JSON)
* rwa-compare      propagate the phase-pulse input under selected drive-term
                   masks, write final amplitudes (CSV)
* noise-sweep      feasibility report over noise scenarios (CSV + JSON)
* lamb-dicke-check sine-vs-linear operator error over a log grid of η (CSV)

Config schema (strict: unknown keys are rejected)::

    {
      "params":  {"nu": ..., "omega0": ..., "omega_c": ..., "omega_L": ...,
                  "Omega": ..., "g": ..., "eta_L": ..., "eta_c": ...},
      "layout":  {"vib_cutoff": 5, "cav_cutoff": 5},
      "model":   "effective" | "full" | "lab",
      "noise":   {"kappa": 0.0, "gamma": 0.0, "heating_rate": 0.0},
      "grid_policy": 20,
      "output_path": "report.json"
    }

``params`` and ``layout`` are required (individual fields may be omitted and
default to the reference parameter set / cutoff 5).  Reports are
deterministic: fixed key order, floats at 12 significant digits, complex
values as [re, im] pairs.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ModeLayout, basis_state
from .gates import BASIS_LABELS, cnot_sequence, truth_table
from .hamiltonians import (INTERACTION_TERMS, PHASE_GATE, PhysParams,
                           apply_resonance, default_params, h_interaction,
                           lamb_dicke_ops, position_operator)
from .noise import (MICROWAVE, OPTICAL, FeasibilityReport, NoiseParams,
                    NoiseScenario, ScenarioResult, feasibility_report,
                    noisy_gate_fidelity)
from .propagation import NumericalError, TimeGrid, propagate_td, recommended_steps

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "cmd_truth_table",
    "cmd_rwa_compare",
    "cmd_noise_sweep",
    "cmd_lamb_dicke_check",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_TOP_KEYS = ("params", "layout", "model", "noise", "grid_policy", "output_path")
_PARAM_KEYS = ("nu", "omega0", "omega_c", "omega_L", "Omega", "g", "eta_L", "eta_c")
_LAYOUT_KEYS = ("vib_cutoff", "cav_cutoff")
_NOISE_KEYS = ("kappa", "gamma", "heating_rate")
_MODELS = ("effective", "full", "lab")


class ConfigError(ValueError):
    """Raised for malformed or contract-violating configuration input."""


@dataclass(frozen=True)
class RunConfig:
    params: PhysParams
    layout: ModeLayout
    model: str = "effective"
    noise: NoiseParams | None = None
    grid_policy: int = 20
    output_path: str | None = None


def _require_object(value, name: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a JSON object")
    return value


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key in {where}: {key!r}")


def _number(obj: dict, key: str, where: str, default):
    value = obj.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    return float(value)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON config; defaults applied for omitted
    optional fields (no noise → closed system, grid_policy → 20)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON: {exc.msg} "
            f"(line {exc.lineno}, column {exc.colno})") from exc

    top = _require_object(raw, "config")
    _reject_unknown(top, _TOP_KEYS, "config")
    for required in ("params", "layout"):
        if required not in top:
            raise ConfigError(f"missing required config key: {required!r}")

    defaults = default_params()
    params_obj = _require_object(top["params"], "params")
    _reject_unknown(params_obj, _PARAM_KEYS, "params")
    try:
        params = PhysParams(**{key: _number(params_obj, key, "params",
                                            getattr(defaults, key))
                               for key in _PARAM_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    layout_obj = _require_object(top["layout"], "layout")
    _reject_unknown(layout_obj, _LAYOUT_KEYS, "layout")
    cutoffs = {}
    for key in _LAYOUT_KEYS:
        value = layout_obj.get(key, 5)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"layout.{key} must be an integer")
        cutoffs[key] = value
    try:
        layout = ModeLayout(**cutoffs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    model = top.get("model", "effective")
    if not isinstance(model, str) or model.lower() not in _MODELS:
        raise ConfigError(f"model must be one of {_MODELS}, got {model!r}")
    model = model.lower()

    noise = None
    if "noise" in top:
        noise_obj = _require_object(top["noise"], "noise")
        _reject_unknown(noise_obj, _NOISE_KEYS, "noise")
        try:
            noise = NoiseParams(**{key: _number(noise_obj, key, "noise", 0.0)
                                   for key in _NOISE_KEYS})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    grid_policy = top.get("grid_policy", 20)
    if isinstance(grid_policy, bool) or not isinstance(grid_policy, int):
        raise ConfigError("grid_policy must be an integer")
    if grid_policy < 1:
        raise ConfigError(f"grid_policy must be >= 1, got {grid_policy}")

    output_path = top.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path must be a string")

    return RunConfig(params=params, layout=layout, model=model, noise=noise,
                     grid_policy=grid_policy, output_path=output_path)


# --------------------------------------------------------------------------
# deterministic serialization


def _sig(x: float):
    """Round to 12 significant digits; non-finite values become null."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def _pair(z: complex) -> list:
    z = complex(z)
    return [_sig(z.real), _sig(z.imag)]


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _write_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([_csv_cell(cell) for cell in row])


def _csv_cell(cell):
    if isinstance(cell, bool):
        return str(cell).lower()
    if isinstance(cell, float):
        return f"{cell:.12g}"
    return cell


# --------------------------------------------------------------------------
# subcommands


def _resolve_out(config: RunConfig, out_flag: str | None) -> str:
    path = out_flag or config.output_path
    if not path:
        raise ConfigError("no output path: set output_path in the config or pass --out")
    return path


def cmd_truth_table(config: RunConfig, out_path: str) -> int:
    """Run the CNOT schedule under the configured model, write the report."""
    seq = cnot_sequence(config.params, config.layout, config.model)
    report = truth_table(seq, config.grid_policy)
    g1, g2 = report.makhlin
    obj = {
        "basis": list(BASIS_LABELS),
        "model": config.model,
        "logical_matrix": [[_pair(z) for z in row] for row in report.logical_matrix],
        "leakage_per_input": [_sig(x) for x in report.leakage_per_input],
        "raw_fidelity": _sig(report.raw_fidelity),
        "phase_fitted_fidelity": _sig(report.phase_fitted_fidelity),
        "local_equiv_fidelity": _sig(report.local_equiv_fidelity),
        "makhlin": {"g1": _pair(g1), "g2": _sig(g2)},
    }
    _write_json(out_path, obj)
    return EXIT_OK


def _parse_mask(raw: str):
    """'all' → every term, 'none' → empty mask, else comma-separated labels."""
    raw = raw.strip().lower()
    if raw == "all":
        return None
    if raw in ("none", ""):
        return ()
    labels = tuple(part.strip() for part in raw.split(","))
    for label in labels:
        if label not in INTERACTION_TERMS:
            raise ConfigError(
                f"unknown drive-term label {label!r}; choose from "
                f"{INTERACTION_TERMS}, 'all' or 'none'")
    return labels


def _mask_name(mask) -> str:
    if mask is None:
        return "all"
    if not mask:
        return "none"
    return "+".join(mask)


def _rwa_one_mask(args):
    params, layout, mask, grid_policy = args
    tuned = apply_resonance(params, PHASE_GATE)
    factory = h_interaction(tuned, layout, terms=mask)
    duration = math.pi / (params.eta_c * params.g)
    omega = max(factory.max_phase_frequency,
                float(np.linalg.norm(factory.matrix(0.0), 2)))
    grid = TimeGrid(0.0, duration, recommended_steps(omega, duration, grid_policy))
    psi0 = basis_state("e", 1, 0, layout)
    out = propagate_td(factory, grid, psi0)
    amp_e10 = out.amplitudes[layout.index_of("e", 1, 0)]
    amp_g01 = out.amplitudes[layout.index_of("g", 0, 1)]
    return complex(amp_e10), complex(amp_g01)


def cmd_rwa_compare(config: RunConfig, term_mask_list, out_path: str,
                    jobs: int = 1) -> int:
    """Propagate the phase-pulse input (e,1,0) under each drive-term mask.

    One CSV row per mask: final amplitude on (e,1,0) and on (g,0,1).
    """
    if config.params.eta_c * config.params.g <= 0:
        raise ConfigError("rwa-compare requires eta_c > 0 and g > 0")
    tasks = [(config.params, config.layout, mask, config.grid_policy)
             for mask in term_mask_list]
    results = _map_tasks(_rwa_one_mask, tasks, jobs)
    rows = [["mask", "amp_e10_re", "amp_e10_im", "amp_g01_re", "amp_g01_im"]]
    for mask, (amp_e10, amp_g01) in zip(term_mask_list, results):
        rows.append([_mask_name(mask), amp_e10.real, amp_e10.imag,
                     amp_g01.real, amp_g01.imag])
    _write_csv(out_path, rows)
    return EXIT_OK


def _noise_one_scenario(args):
    params, layout, scenario, grid_policy = args
    seq = cnot_sequence(params, layout, model="effective")
    fids, mean = noisy_gate_fidelity(seq, scenario.noise, grid_policy)
    t_total = seq.total_duration
    lifetime = math.inf if scenario.noise.kappa == 0 else 1.0 / scenario.noise.kappa
    return ScenarioResult(
        scenario=scenario,
        kappa_t=scenario.noise.kappa * t_total,
        gamma_t=scenario.noise.gamma * t_total,
        heating_t=scenario.noise.heating_rate * t_total,
        fidelities=fids,
        mean_fidelity=mean,
        cavity_lifetime=lifetime,
        infeasible=t_total > lifetime,
    )


def cmd_noise_sweep(config: RunConfig, scenarios, out_path: str,
                    jobs: int = 1) -> int:
    """Feasibility report over the scenarios; writes CSV and JSON siblings."""
    if jobs > 1:
        tasks = [(config.params, config.layout, s, config.grid_policy)
                 for s in scenarios]
        results = _map_tasks(_noise_one_scenario, tasks, jobs)
        tau_had = math.pi / (4.0 * config.params.Omega)
        tau_pha = math.pi / (config.params.eta_c * config.params.g)
        report = FeasibilityReport(tau_hadamard=tau_had, tau_phase=tau_pha,
                                   t_total=2 * tau_had + tau_pha,
                                   results=tuple(results))
    else:
        report = feasibility_report(config.params, tuple(scenarios),
                                    layout=config.layout,
                                    grid_policy=config.grid_policy)
    csv_path, json_path = _sibling_paths(out_path)
    _write_csv(csv_path, report.csv_rows())
    _write_json(json_path, _round_report(report.to_json_dict()))
    return EXIT_OK


def _sibling_paths(out_path: str) -> tuple[str, str]:
    """CSV and JSON paths sharing the stem of out_path."""
    stem = out_path
    for suffix in (".csv", ".json"):
        if out_path.endswith(suffix):
            stem = out_path[: -len(suffix)]
            break
    return stem + ".csv", stem + ".json"


def _round_report(obj):
    """Recursively round floats for deterministic JSON."""
    if isinstance(obj, float):
        return _sig(obj)
    if isinstance(obj, dict):
        return {k: _round_report(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_report(v) for v in obj]
    return obj


def _eta_grid() -> np.ndarray:
    return np.logspace(-3.0, math.log10(0.3), 13)


def _lamb_dicke_point(args):
    eta, cutoff = args
    _, _, error_norm = lamb_dicke_ops(eta, cutoff)
    x_max = float(np.max(np.abs(np.linalg.eigvalsh(position_operator(cutoff)))))
    bound = (eta * x_max) ** 3 / 6.0
    return eta, error_norm, bound


def cmd_lamb_dicke_check(config: RunConfig, out_path: str, jobs: int = 1) -> int:
    """Tabulate ‖sin(ηX) − ηX‖₂ and its cubic spectral bound over a log η grid."""
    cutoff = config.layout.vib_cutoff
    tasks = [(float(eta), cutoff) for eta in _eta_grid()]
    results = _map_tasks(_lamb_dicke_point, tasks, jobs)
    rows = [["eta", "error_norm", "spectral_bound"]]
    for eta, err, bound in results:
        rows.append([eta, err, bound])
    _write_csv(out_path, rows)
    return EXIT_OK


def _map_tasks(fn, tasks, jobs: int):
    """Run tasks (optionally in a worker pool); results in input order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# --------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ioncavity",
        description="Trapped-ion-in-cavity CNOT simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--out", help="output path (overrides config output_path)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweeps (default 1)")

    add_common(sub.add_parser("truth-table",
                              help="run the CNOT schedule, write gate report JSON"))
    p_rwa = sub.add_parser("rwa-compare",
                           help="phase-pulse amplitudes under drive-term masks")
    add_common(p_rwa)
    p_rwa.add_argument("--mask", action="append", dest="masks", metavar="TERMS",
                       help="term mask: comma-separated labels i..vii, 'all' or "
                            "'none'; repeatable (default: ii, all, none)")
    p_noise = sub.add_parser("noise-sweep",
                             help="feasibility report over noise scenarios")
    add_common(p_noise)
    p_noise.add_argument("--preset", action="append", dest="presets",
                         choices=["optical", "microwave"],
                         help="named scenario preset; repeatable")
    p_noise.add_argument("--scenario", action="append", dest="scenarios",
                         metavar="NAME,KAPPA,GAMMA,HEATING",
                         help="custom scenario as name,kappa,gamma,heating_rate; "
                              "repeatable")
    add_common(sub.add_parser("lamb-dicke-check",
                              help="sine-vs-linear coupling error over an eta grid"))
    return parser


def _parse_scenario(raw: str) -> NoiseScenario:
    parts = raw.split(",")
    if len(parts) != 4:
        raise ConfigError(
            f"scenario must be name,kappa,gamma,heating_rate, got {raw!r}")
    name = parts[0].strip()
    try:
        kappa, gamma, heating = (float(p) for p in parts[1:])
    except ValueError as exc:
        raise ConfigError(f"scenario rates must be numbers, got {raw!r}") from exc
    try:
        return NoiseScenario(name, NoiseParams(kappa, gamma, heating))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = parse_config(text)
        out_path = _resolve_out(config, args.out)
        if args.command == "truth-table":
            return cmd_truth_table(config, out_path)
        if args.command == "rwa-compare":
            specs = args.masks or ["ii", "all", "none"]
            masks = [_parse_mask(s) for s in specs]
            return cmd_rwa_compare(config, masks, out_path, args.jobs)
        if args.command == "noise-sweep":
            scenarios = [OPTICAL if name == "optical" else MICROWAVE
                         for name in (args.presets or [])]
            scenarios += [_parse_scenario(s) for s in (args.scenarios or [])]
            if not scenarios:
                scenarios = [OPTICAL, MICROWAVE]
            return cmd_noise_sweep(config, scenarios, out_path, args.jobs)
        if args.command == "lamb-dicke-check":
            return cmd_lamb_dicke_check(config, out_path, args.jobs)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
