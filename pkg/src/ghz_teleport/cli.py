"""Command-line front end: analyze, simulate, sweep, verify.

Exit codes: 0 success, 1 invalid input, 2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import analytics, protocol, verify
from .bases import ChannelConfig
from .statevec import make_ket

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2
Z_SUSPICIOUS = 4.0
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    pass


def parse_complex(value: Any, name: str) -> complex:
    """Accept a real number or an [re, im] pair."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        z = complex(value)
    elif isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        z = complex(value[0], value[1])
    else:
        raise ConfigError(f"{name}: expected a number or [re, im], got {value!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(f"{name}: must be finite")
    return z


def complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class RunConfig:
    n: complex = 1.0
    m: complex = 1.0
    b_list: tuple[complex, ...] = (1.0,)
    L: int = 3
    trials: int = 10_000
    seed: int = 0
    input: str | tuple[complex, complex] = "haar"
    output_format: str = "json"

    _KEYS = frozenset({"n", "m", "b", "b_list", "L", "trials", "seed", "input", "output_format"})

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - cls._KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        L = data.get("L", 3)
        if isinstance(L, bool) or not isinstance(L, int) or L < 2:
            raise ConfigError(f"L must be an integer >= 2, got {L!r}")
        if "b" in data and "b_list" in data:
            raise ConfigError("give either b or b_list, not both")
        if "b_list" in data:
            raw = data["b_list"]
            if not isinstance(raw, list):
                raise ConfigError("b_list must be a list")
            b_list = tuple(parse_complex(v, f"b_list[{i}]") for i, v in enumerate(raw))
        else:
            b = parse_complex(data.get("b", 1.0), "b")
            b_list = (b,) * (L - 2)

        trials = data.get("trials", 10_000)
        if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {trials!r}")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {seed!r}")

        raw_input = data.get("input", "haar")
        if raw_input == "haar":
            state: str | tuple[complex, complex] = "haar"
        elif isinstance(raw_input, list) and len(raw_input) == 2:
            state = (parse_complex(raw_input[0], "input[0]"), parse_complex(raw_input[1], "input[1]"))
            if state[0] == 0 and state[1] == 0:
                raise ConfigError("input amplitudes cannot both be zero")
        else:
            raise ConfigError(f'input must be "haar" or [alpha, beta], got {raw_input!r}')

        fmt = data.get("output_format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"output_format must be json or csv, got {fmt!r}")

        cfg = cls(
            n=parse_complex(data.get("n", 1.0), "n"),
            m=parse_complex(data.get("m", 1.0), "m"),
            b_list=b_list,
            L=L,
            trials=trials,
            seed=seed,
            input=state,
            output_format=fmt,
        )
        try:
            cfg.channel()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def to_dict(self) -> dict:
        return {
            "n": complex_pair(self.n),
            "m": complex_pair(self.m),
            "b_list": [complex_pair(b) for b in self.b_list],
            "L": self.L,
            "trials": self.trials,
            "seed": self.seed,
            "input": self.input if self.input == "haar" else [complex_pair(z) for z in self.input],
            "output_format": self.output_format,
        }

    def channel(self) -> ChannelConfig:
        return ChannelConfig(n=self.n, m=self.m, b_list=self.b_list, L=self.L)

    def input_policy(self):
        return "haar" if self.input == "haar" else make_ket(list(self.input))


def load_json_arg(value: str | None) -> dict:
    """Read a JSON object from a path, or parse the argument itself as JSON."""
    if value is None:
        return {}
    path = Path(value)
    try:
        if path.exists():
            with path.open("r", encoding="utf-8") as handle:
                data = json.load(handle)
        else:
            data = json.loads(value)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse config {value!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _run_config(args) -> RunConfig:
    data = dict(load_json_arg(args.config))
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        data["trials"] = args.trials
    if getattr(args, "format", None) is not None:
        data["output_format"] = args.format
    return RunConfig.from_dict(data)


def region_info(cfg: ChannelConfig) -> dict | None:
    if cfg.L != 3:
        return None
    w = analytics.weights_from_params(cfg.n, cfg.m, cfg.b_list[0])
    info: dict[str, Any] = {
        "weights": list(w.astuple()),
        "canonical": None,
        "region": None,
        "ties": [],
        "regional_p": None,
        "p_max": analytics.max_success_probability(w.xi) if 0.0 < w.xi < 1.0 else None,
    }
    if w.interior:
        canon = analytics.canonicalize(w)
        region = analytics.classify_region(canon)
        info.update(
            canonical=list(canon.astuple()),
            region=region.label.value,
            ties=sorted(t.value for t in region.ties),
            regional_p=analytics.regional_formula(region, canon),
        )
    return info


def _warnings(cfg: ChannelConfig) -> list[str]:
    out = []
    if cfg.n == 0:
        out.append("degenerate channel: n = 0 is a product state, teleportation never succeeds")
    if cfg.m == 0:
        out.append("degenerate Bell basis: m = 0")
    if any(b == 0 for b in cfg.b_list):
        out.append("degenerate X basis: some b = 0")
    return out


def _branch_rows(cfg: ChannelConfig) -> list[dict]:
    rows = []
    for row in analytics.branch_table(cfg):
        rows.append(
            {
                "branch": row["branch"],
                "pauli": row["pauli"],
                "c": complex_pair(row["c"]),
                "d": complex_pair(row["d"]),
                "success_mass": row["success_mass"],
            }
        )
    return rows


def cmd_analyze(run: RunConfig) -> dict:
    cfg = run.channel()
    return {
        "command": "analyze",
        "config": run.to_dict(),
        "analytic_p": analytics.analytic_success(cfg),
        "region_info": region_info(cfg),
        "branches": _branch_rows(cfg),
        "warnings": _warnings(cfg),
    }


def z_score(empirical: float, analytic: float, trials: int) -> float | None:
    """None when the analytic value is 0 or 1 and the empirical one differs."""
    if 0.0 < analytic < 1.0:
        return (empirical - analytic) / math.sqrt(analytic * (1.0 - analytic) / trials)
    return 0.0 if math.isclose(empirical, analytic, abs_tol=1e-12) else None


def cmd_simulate(run: RunConfig) -> dict:
    cfg = run.channel()
    report = protocol.run_trials(cfg, run.trials, run.input_policy(), run.seed, keep_records=run.trials <= 10)
    analytic = analytics.analytic_success(cfg)
    z = z_score(report.empirical_p, analytic, report.trials)
    masses = {row["branch"]: row["success_mass"] for row in analytics.branch_table(cfg)}
    branches = []
    for entry in report.to_dict()["branches"]:
        entry["empirical_success_mass"] = entry["successes"] / report.trials
        entry["analytic_success_mass"] = masses[entry["branch"]]
        branches.append(entry)
    return {
        "command": "simulate",
        "config": run.to_dict(),
        "trials": report.trials,
        "successes": report.successes,
        "empirical_p": report.empirical_p,
        "analytic_p": analytic,
        "z_score": z,
        "suspicious": z is None or abs(z) > Z_SUSPICIOUS,
        "mean_success_fidelity": report.mean_success_fidelity,
        "min_success_fidelity": report.min_success_fidelity,
        "branches": branches,
        "records": list(report.records),
        "region_info": region_info(cfg),
        "warnings": _warnings(cfg),
    }


SWEEP_COLUMNS = ["abs_n", "abs_m", "abs_b", "xi", "zeta", "eta", "p", "region", "ties", "p_max"]


def parse_axis(value: Any, name: str) -> np.ndarray:
    """Number, explicit list, {start, stop, num} or {start, stop, step}."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        values = np.array([float(value)])
    elif isinstance(value, list):
        try:
            values = np.array([float(v) for v in value])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: list entries must be numbers") from exc
    elif isinstance(value, dict) and {"start", "stop"} <= set(value):
        start, stop = float(value["start"]), float(value["stop"])
        if "num" in value:
            num = value["num"]
            if isinstance(num, bool) or not isinstance(num, int) or num < 1:
                raise ConfigError(f"{name}: num must be a positive integer")
            values = np.linspace(start, stop, num)
        elif "step" in value:
            step = float(value["step"])
            if not step > 0:
                raise ConfigError(f"{name}: step must be > 0")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = start + step * np.arange(max(count, 0))
        else:
            raise ConfigError(f"{name}: range needs num or step")
    else:
        raise ConfigError(f"{name}: expected a number, a list or a range object, got {value!r}")
    if values.size == 0:
        raise ConfigError(f"{name}: empty axis")
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"{name}: values must be finite")
    return values


def _sweep_row(w: analytics.SquaredWeights, moduli: tuple[float, float, float], p: float) -> list:
    region, ties = "", ""
    if w.interior:
        r = analytics.classify_region(analytics.canonicalize(w))
        region, ties = r.label.value, ";".join(sorted(t.value for t in r.ties))
    p_max = analytics.max_success_probability(w.xi) if 0.0 < w.xi < 1.0 else ""
    return [*moduli, w.xi, w.zeta, w.eta, p, region, ties, p_max]


def sweep_rows(spec: dict) -> list[list]:
    mode = spec.get("mode", "weights")
    rows = []
    if mode == "weights":
        axes = [parse_axis(spec.get(k, 0.5), k) for k in ("xi", "zeta", "eta")]
        for grid in axes:
            if np.any((grid < 0) | (grid > 1)):
                raise ConfigError("weights must lie in [0, 1]")
        for xi in axes[0]:
            for zeta in axes[1]:
                for eta in axes[2]:
                    w = analytics.SquaredWeights(xi, zeta, eta)
                    rows.append(_sweep_row(w, w.moduli(), analytics.success_probability_weights(w)))
    elif mode == "moduli":
        axes = [parse_axis(spec.get(k, 1.0), k) for k in ("n", "m", "b")]
        for grid in axes:
            if np.any(grid < 0):
                raise ConfigError("moduli must be non-negative")
        for n in axes[0]:
            for m in axes[1]:
                for b in axes[2]:
                    w = analytics.weights_from_params(n, m, b)
                    rows.append(_sweep_row(w, (float(n), float(m), float(b)), analytics.success_probability(n, m, b)))
    else:
        raise ConfigError(f"sweep mode must be weights or moduli, got {mode!r}")
    return rows


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


ANALYZE_COLUMNS = ["branch", "pauli", "c_re", "c_im", "d_re", "d_im", "success_mass"]
SIMULATE_COLUMNS = ["branch", "count", "successes", "empirical_success_mass", "analytic_success_mass"]


def report_csv(report: dict) -> str:
    if report["command"] == "analyze":
        rows = [[r["branch"], r["pauli"], *r["c"], *r["d"], r["success_mass"]] for r in report["branches"]]
        rows.append(["total", "", "", "", "", "", report["analytic_p"]])
        return to_csv(ANALYZE_COLUMNS, rows)
    rows = [
        [r["branch"], r["count"], r["successes"], r["empirical_success_mass"], r["analytic_success_mass"]]
        for r in report["branches"]
    ]
    rows.append(["total", report["trials"], report["successes"], report["empirical_p"], report["analytic_p"]])
    return to_csv(SIMULATE_COLUMNS, rows)


def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        return report_csv(report)
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghz-teleport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=False):
        p.add_argument("--config", help="JSON config file, or an inline JSON object")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=["json", "csv"])
        if trials:
            p.add_argument("--seed", type=int)
            p.add_argument("--trials", type=int)

    common(sub.add_parser("analyze", help="closed-form success probability and region analysis"))
    common(sub.add_parser("simulate", help="Monte Carlo run of the protocol"), trials=True)
    sweep = sub.add_parser("sweep", help="grid of success probabilities as CSV")
    sweep.add_argument("--config", required=True, help="sweep spec: JSON file or inline object")
    sweep.add_argument("--out", help="CSV path (stdout if omitted)")
    check = sub.add_parser("verify", help="run the invariant suites")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--scale", choices=sorted(verify.SCALES), default="quick")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            results = verify.run_checks(args.seed, args.scale)
            print(verify.format_table(results))
            return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY
        if args.command == "sweep":
            emit(to_csv(SWEEP_COLUMNS, sweep_rows(load_json_arg(args.config))), args.out)
            return EXIT_OK
        run = _run_config(args)
        report = cmd_analyze(run) if args.command == "analyze" else cmd_simulate(run)
        for warning in report["warnings"]:
            print(f"warning: {warning}", file=sys.stderr)
        emit(render(report, run.output_format), args.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
