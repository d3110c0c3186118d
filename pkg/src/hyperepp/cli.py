"""Command-line front end: ``hyperepp {coeffs,iterate,sweep,simulate}``.

Configuration is a flat ``key = value`` file with dotted keys; ``#`` starts a comment.
Any key can be overridden on the command line as ``--cavity.g_ratio 2.4`` or
``--cavity.g_ratio=2.4``.  Output goes to ``--out`` (default stdout) as CSV or JSON.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from .analysis import CHECKPOINTS, TWO_STEP_CHECKPOINTS, QUANTITIES, SweepGrid, SweepTable, sweep
from .cavity import CavityParams, ScatteringCoefficients
from .epp import (
    BellMixture,
    GhzMixture,
    StepOptions,
    bell_efficiency,
    bell_recurrence,
    ghz_efficiency,
    ghz_recurrence,
    iterate,
    run_bell_round,
    run_ghz_round,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
MAX_ROUNDS = 32


class ConfigError(ValueError):
    """Bad configuration key, value or file."""


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return v

    return parse


def _finite(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {s!r}")
    return v


def _quantities(s: str) -> list[str]:
    return [q.strip() for q in s.split(",") if q.strip()]


SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "cavity.g_ratio": (_finite, 2.4),
    "cavity.ks_ratio": (_finite, 0.3),
    "cavity.gamma": (_finite, 0.1),
    "cavity.kappa": (_finite, 1.0),
    "cavity.omega_c": (_finite, 0.0),
    "cavity.omega_x": (_finite, 0.0),
    "cavity.omega": (_finite, 0.0),
    "mixture.kind": (_choice("bell", "ghz"), "bell"),
    "mixture.F1": (_finite, 0.8),
    "mixture.F2": (_finite, 0.8),
    "mixture.F0": (_finite, 0.7),
    "mixture.F3": (_finite, None),
    "mixture.P0": (_finite, 0.7),
    "rounds": (int, 4),
    "mode": (_choice("ideal", "nonideal"), "ideal"),
    "output.path": (str, None),
    "output.format": (_choice("csv", "json"), "csv"),
    "sweep.preset": (_choice("grid", "checkpoints"), "grid"),
    "sweep.g_min": (_finite, 0.0),
    "sweep.g_max": (_finite, 3.0),
    "sweep.g_num": (int, 31),
    "sweep.ks_min": (_finite, 0.0),
    "sweep.ks_max": (_finite, 1.0),
    "sweep.ks_num": (int, 11),
    "sweep.quantities": (_quantities, ["Fp", "eta_p", "Fj", "eta_j"]),
    "sweep.oracle": (_bool, False),
    "simulate.detect_early": (_bool, True),
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value`` strings from config text; diagnostics carry line numbers."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse_overrides(tokens: Sequence[str]) -> dict[str, str]:
    """``--key value`` / ``--key=value`` pairs left over by argparse."""
    out: dict[str, str] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, sep, value = tok[2:].partition("=")
        if not sep:
            if i + 1 >= len(tokens):
                raise ConfigError(f"override --{key} needs a value")
            value = tokens[i + 1]
            i += 1
        if key not in SCHEMA:
            raise ConfigError(f"unknown override --{key}")
        out[key] = value
        i += 1
    return out


def resolve(raw: dict[str, str], where: dict[str, str] | None = None) -> dict[str, Any]:
    """Typed values for every schema key, defaults filled in."""
    cfg = {k: default for k, (_, default) in SCHEMA.items()}
    for key, value in raw.items():
        conv = SCHEMA[key][0]
        try:
            cfg[key] = conv(value)
        except ValueError as exc:
            loc = (where or {}).get(key, "override")
            raise ConfigError(f"{loc}: bad value for {key}: {exc}") from None
    if not 0 <= cfg["rounds"] <= MAX_ROUNDS:
        raise ConfigError(f"rounds must lie in [0, {MAX_ROUNDS}], got {cfg['rounds']}")
    return cfg


@dataclass
class RunConfig:
    values: dict[str, Any]
    explicit: frozenset[str] = frozenset()  # keys set by the file or an override

    @property
    def cavity(self) -> CavityParams:
        v = self.values
        try:
            return CavityParams.from_ratios(
                v["cavity.g_ratio"], v["cavity.ks_ratio"], gamma=v["cavity.gamma"], kappa=v["cavity.kappa"],
                omega_c=v["cavity.omega_c"], omega_x=v["cavity.omega_x"], omega=v["cavity.omega"],
            )
        except ValueError as exc:
            raise ConfigError(f"cavity: {exc}") from None

    @property
    def mixture(self) -> BellMixture | GhzMixture:
        v = self.values
        try:
            if v["mixture.kind"] == "bell":
                return BellMixture(v["mixture.F1"], v["mixture.F2"])
            F0, F1, F2 = v["mixture.F0"], v["mixture.F1"], v["mixture.F2"]
            F3 = v["mixture.F3"] if v["mixture.F3"] is not None else 1 - F0 - F1 - F2
            return GhzMixture(F0, F1, F2, F3, v["mixture.P0"], 1 - v["mixture.P0"])
        except ValueError as exc:
            raise ConfigError(f"mixture: {exc}") from None


def load_config(path: str | None, overrides: dict[str, str]) -> RunConfig:
    raw: dict[str, str] = {}
    where: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        raw = parse_config_text(text, path)
        for lineno, line in enumerate(text.splitlines(), 1):
            key = line.split("#", 1)[0].partition("=")[0].strip()
            if key in raw:
                where[key] = f"{path}:{lineno}"
    raw.update(overrides)
    return RunConfig(resolve(raw, where), frozenset(raw))


# --- commands ---------------------------------------------------------------------------
def cmd_coeffs(cfg: RunConfig) -> SweepTable:
    c = ScatteringCoefficients.from_params(cfg.cavity)
    rows = [
        {"coefficient": name, "modulus": abs(z), "phase": math.atan2(z.imag, z.real)}
        for name, z in (("r", complex(c.r)), ("t", complex(c.t)), ("r0", complex(c.r0)), ("t0", complex(c.t0)))
    ]
    return SweepTable(["coefficient", "modulus", "phase"], rows)


def cmd_iterate(cfg: RunConfig) -> SweepTable:
    m = cfg.mixture
    n = cfg.values["rounds"]
    if isinstance(m, BellMixture):
        cols = ["round", "F1", "F2", "joint_F", "Y0", "Y"]
        rows = [
            {"round": p.round, "F1": p.mixture.F1, "F2": p.mixture.F2, "joint_F": p.fidelity,
             "Y0": bell_efficiency(p.mixture, False), "Y": bell_efficiency(p.mixture, True)}
            for p in iterate(bell_recurrence, m, n)
        ]
        return SweepTable(cols, rows)
    cols = ["round", "F0", "F1", "F2", "F3", "P0", "P1", "joint_F", "Y0", "Y", "improving"]
    rows = []
    for p in iterate(ghz_recurrence, m, n):
        q = p.mixture
        rows.append({
            "round": p.round, "F0": q.F0, "F1": q.F1, "F2": q.F2, "F3": q.F3, "P0": q.P0, "P1": q.P1,
            "joint_F": p.fidelity, "Y0": ghz_efficiency(q, False), "Y": ghz_efficiency(q, True),
            "improving": ghz_recurrence(q).F0 > q.F0,
        })
    return SweepTable(cols, rows)


def _threads() -> int:
    env = os.environ.get("HYPEREPP_THREADS")
    cpu = os.cpu_count() or 1
    if env is None:
        return cpu
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"HYPEREPP_THREADS must be a positive integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(f"HYPEREPP_THREADS must be a positive integer, got {env!r}")
    return min(n, cpu)


def cmd_sweep(cfg: RunConfig) -> SweepTable:
    v = cfg.values
    quantities = v["sweep.quantities"]
    try:
        if v["sweep.preset"] == "checkpoints":
            points = sorted(CHECKPOINTS + TWO_STEP_CHECKPOINTS, key=lambda p: (p[1], p[0]))
            quantities = quantities if "sweep.quantities" in cfg.explicit else list(QUANTITIES)
            tables = [sweep(SweepGrid((g,), (ks,), v["cavity.gamma"]), quantities, v["sweep.oracle"]) for g, ks in points]
            return SweepTable(tables[0].columns, [r for t in tables for r in t.rows])
        grid = SweepGrid.linspace(
            (v["sweep.g_min"], v["sweep.g_max"], v["sweep.g_num"]),
            (v["sweep.ks_min"], v["sweep.ks_max"], v["sweep.ks_num"]),
            v["cavity.gamma"],
        )
        return sweep(grid, quantities, v["sweep.oracle"], _threads())
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None


def cmd_simulate(cfg: RunConfig) -> SweepTable:
    v = cfg.values
    coeffs = ScatteringCoefficients.from_params(cfg.cavity) if v["mode"] == "nonideal" else None
    options = StepOptions(coeffs=coeffs, detect_early=v["simulate.detect_early"])
    m = cfg.mixture
    rows: list[dict[str, Any]] = []

    def add(name: str, value: Any) -> None:
        rows.append({"quantity": name, "value": value})

    if isinstance(m, BellMixture):
        res = run_bell_round(m, options)
        for case, p in res.case_probabilities.items():
            add(f"P[{case.value}]", p)
        add("Y0", res.Y0)
        add("Y", res.Y)
        add("success_probability", sum(res.case_probabilities.values()))
        for name, ens in (("keep", res.keep), ("joined", res.joined)):
            if ens is None:
                continue
            w = res.weights(ens)
            add(f"{name}.F1", w.F1)
            add(f"{name}.F2", w.F2)
            add(f"{name}.joint_F", w.F1 * w.F2)
            add(f"{name}.components", len(ens))
    else:
        res = run_ghz_round(m, options)
        for cls, p in res.class_probabilities.items():
            add(f"P[{cls.value}]", p)
        add("Y0", res.Y0)
        add("Y", res.Y)
        add("success_probability", sum(res.class_probabilities.values()))
        for name, ens in (("keep", res.keep), ("joined", res.joined)):
            if ens is None:
                continue
            w = res.weights(ens)
            for key in ("F0", "F1", "F2", "F3", "P0", "P1"):
                add(f"{name}.{key}", getattr(w, key))
            add(f"{name}.joint_F", w.F0 * w.P0)
            add(f"{name}.components", len(ens))
    return SweepTable(["quantity", "value"], rows)


COMMANDS = {"coeffs": cmd_coeffs, "iterate": cmd_iterate, "sweep": cmd_sweep, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperepp",
        description="Hyperentanglement purification: coefficients, recurrences, sweeps and circuit runs.",
        epilog="Any config key may be overridden as --<dotted.key> VALUE.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parser.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    return parser


def _render(table: SweepTable, fmt: str) -> str:
    return table.to_json() if fmt == "json" else table.to_csv()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, rest = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        overrides = parse_overrides(rest)
        cfg = load_config(args.config, overrides)
        fmt = args.format or cfg.values["output.format"]
        out = args.out or cfg.values["output.path"]
        text = _render(COMMANDS[args.command](cfg), fmt)
    except ConfigError as exc:
        print(f"hyperepp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure past config parsing is a runtime error
        print(f"hyperepp: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"hyperepp: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
