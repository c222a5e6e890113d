"""Command-line entry point: ``cxstep {region,paths,optimize,nls,pi,verify}``.

Every command writes its artifacts plus ``manifest.json`` into ``--out``.
A JSON file passed with ``--config`` overrides the flags; its keys are the
option names of the sub-command (dashes or underscores) and unknown keys are
rejected.  A ``manifest.json`` from an earlier run is accepted as a config.

Exit codes: 0 ok, 1 usage error, 2 infeasible/unstable (or a failed
acceptance criterion), 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .errors import CxStepError, GridSizeError, InfeasibleError, NumericalFailure

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3

# options whose values may legitimately start with "-"
_VALUE_OPTIONS = ("--window", "--eigenvalues", "--coeffs", "--weights", "--dts", "--c")

# eigenvalues of the stand-in spectrum for the asymmetric-region scenario:
# a cluster in the second quadrant, none mirrored below the real axis
STAND_IN_SPECTRUM = (-0.5 + 2.0j, -1.0 + 2.5j, -1.5 + 1.5j, -0.25 + 3.0j, -2.0 + 1.0j)


class UsageError(Exception):
    pass


def parse_complex(token: str) -> complex:
    """Parse ``1``, ``-2.5``, ``i``, ``-i``, ``0.5+0.5i``, ``1e-3-2j``."""
    s = token.strip().replace(" ", "")
    if not s:
        raise UsageError("empty complex number")
    s = re.sub(r"(^|[+-])[ij]$", r"\g<1>1j", s)
    if s.endswith("i"):
        s = s[:-1] + "j"
    try:
        return complex(s)
    except ValueError:
        raise UsageError(f"cannot parse complex number {token!r}") from None


def parse_complex_list(text: str) -> list[complex]:
    return [parse_complex(t) for t in text.split(",") if t.strip()] or _raise(f"empty list {text!r}")


def parse_float_list(text: str) -> list[float]:
    out = []
    for t in text.split(","):
        if not t.strip():
            continue
        try:
            out.append(float(t))
        except ValueError:
            raise UsageError(f"cannot parse number {t.strip()!r}") from None
    return out or _raise(f"empty list {text!r}")


def _raise(msg):
    raise UsageError(msg)


def _complex_json(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_manifest(out: Path, command: str, config: dict, outputs: list[str], extra: dict | None = None) -> None:
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "outputs": outputs,
        "rerun": ["python3", "-m", "cxstep", command, "--config", str(out / "manifest.json")],
    }
    manifest.update(extra or {})
    _write_json(out / "manifest.json", manifest)


# --- commands -------------------------------------------------------------


def _resolve_polynomial(cfg: dict):
    from . import presets
    from .paths import StepPath, path_to_polynomial
    from .poly import StabilityPolynomial

    given = [k for k in ("preset", "coeffs", "weights") if cfg.get(k)]
    if len(given) != 1:
        raise UsageError("give exactly one of --preset, --coeffs, --weights")
    if cfg.get("preset"):
        try:
            return presets.polynomial(cfg["preset"])
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    if cfg.get("coeffs"):
        return StabilityPolynomial(parse_complex_list(cfg["coeffs"]))
    return path_to_polynomial(StepPath(parse_complex_list(cfg["weights"])))


def cmd_region(cfg: dict, out: Path) -> int:
    from .poly import RegionWindow, region_grid

    p = _resolve_polynomial(cfg)
    bounds = parse_float_list(cfg["window"])
    if len(bounds) != 4:
        raise UsageError(f"--window needs re_min,re_max,im_min,im_max, got {cfg['window']!r}")
    nx = cfg.get("nx") or cfg["res"]
    ny = cfg.get("ny") or cfg["res"]
    try:
        win = RegionWindow(*bounds, nx=int(nx), ny=int(ny))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    grid = region_grid(p, win)
    grid.to_csv(out / "region.csv")
    _write_manifest(out, "region", cfg, ["region.csv"],
                    {"polynomial": [_complex_json(c) for c in p.coeffs], "stable_area": grid.stable_area()})
    return EXIT_OK


def cmd_paths(cfg: dict, out: Path) -> int:
    from .paths import enumerate_full_order_paths

    n = int(cfg["n"])
    if n not in range(1, 6):
        raise UsageError(f"--n must be in 1..5, got {n}")
    fam = enumerate_full_order_paths(n)
    fam.to_json(out / "paths.json", with_partial_sums=True)
    _write_manifest(out, "paths", cfg, ["paths.json"], {"family_size": len(fam.members)})
    return EXIT_OK


def _resolve_spectrum(cfg: dict):
    from .optimize import Spectrum

    given = [k for k in ("spectrum", "eigenvalues", "stand_in") if cfg.get(k)]
    if len(given) != 1:
        raise UsageError("give exactly one of --spectrum, --eigenvalues, --stand-in")
    if cfg.get("spectrum"):
        try:
            return Spectrum.from_csv(cfg["spectrum"])
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    if cfg.get("eigenvalues"):
        return Spectrum(parse_complex_list(cfg["eigenvalues"]))
    return Spectrum(STAND_IN_SPECTRUM)


def cmd_optimize(cfg: dict, out: Path) -> int:
    from .optimize import OptimizationProblem, max_stable_step, polynomial_to_paths

    spec = _resolve_spectrum(cfg)
    try:
        prob = OptimizationProblem(spec, int(cfg["stages"]), int(cfg["order"]), cfg["domain"],
                                   float(cfg["tol_h"]), float(cfg["tol_feas"]), int(cfg["seed"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        res = max_stable_step(prob)
    except InfeasibleError as exc:
        _write_json(out / "result.json", {"feasible": False, "reason": str(exc)})
        _write_manifest(out, "optimize", cfg, ["result.json"])
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    payload = res.to_dict()
    payload["paths"] = [[_complex_json(w) for w in p.weights] for p in polynomial_to_paths(res.polynomial)]
    _write_json(out / "result.json", payload)
    _write_manifest(out, "optimize", cfg, ["result.json"],
                    {"spectrum": [_complex_json(v) for v in spec.eigenvalues]})
    print(f"h_max = {res.h_max:.10g}")
    return EXIT_OK


def cmd_nls(cfg: dict, out: Path) -> int:
    from .experiments import NLS_INTEGRATORS, nls_sweep
    from .models import NlsProblem

    dts = parse_float_list(cfg["dts"])
    if any(dt <= 0 for dt in dts):
        raise UsageError("dt values must be positive")
    if cfg.get("c"):
        integrators = {f"c={c}": c for c in parse_complex_list(cfg["c"])}
    else:
        integrators = NLS_INTEGRATORS
    prob = NlsProblem(n_modes=int(cfg["n_modes"]), t_end=float(cfg["t_end"]))
    rows = nls_sweep(prob, dts, integrators, int(cfg["repeats"]))
    out.mkdir(parents=True, exist_ok=True)
    with (out / "nls.csv").open("w", newline="") as fh:
        fields = list(rows[0].as_row())
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.as_row().items()})
    _write_manifest(out, "nls", cfg, ["nls.csv"])
    return EXIT_OK


def cmd_pi(cfg: dict, out: Path) -> int:
    from .experiments import pi_run

    params = {}
    if cfg["problem"] == "prothero":
        params = {k: float(cfg[k]) for k in ("xi", "epsilon") if cfg.get(k) is not None}
    else:
        if cfg.get("epsilon") is not None:
            params["epsilon"] = float(cfg["epsilon"])
        if cfg.get("lam") is not None:
            params["lam"] = float(cfg["lam"])
        if cfg.get("delta") is not None:
            params["delta"] = float(cfg["delta"])
    try:
        res = pi_run(cfg["problem"], cfg["scheme"], float(cfg["dt"]), cfg.get("t_end"), **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outputs = ["summary.json"]
    if res.trajectory is not None:
        res.trajectory.to_csv(out / "trajectory.csv")
        outputs.insert(0, "trajectory.csv")
    summary = {k: (str(v) if isinstance(v, float) and v != v else v) for k, v in res.summary.items()}
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "pi", cfg, outputs)
    return EXIT_INFEASIBLE if res.summary["diverged"] else EXIT_OK


def cmd_verify(cfg: dict, out: Path) -> int:
    from .acceptance import run_all

    only = [int(x) for x in parse_float_list(cfg["only"])] if cfg.get("only") else None
    results = run_all(only)
    for r in results:
        print(r.line())
    report = {"passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}
    _write_json(out / "report.json", report)
    _write_manifest(out, "verify", cfg, ["report.json"])
    return EXIT_OK if report["passed"] else EXIT_INFEASIBLE


COMMANDS = {
    "region": cmd_region,
    "paths": cmd_paths,
    "optimize": cmd_optimize,
    "nls": cmd_nls,
    "pi": cmd_pi,
    "verify": cmd_verify,
}


# --- argument parsing -----------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cxstep", description="Complex time-stepping: stability regions, paths, optimization, experiments.")
    ap.add_argument("--version", action="version", version=f"cxstep {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--config", help="JSON file whose keys override the flags")

    p = sub.add_parser("region", help="rasterize |Phi| on a window")
    p.add_argument("--preset")
    p.add_argument("--coeffs", help="ascending coefficients, e.g. '1,1,0.5+0.5i'")
    p.add_argument("--weights", help="Euler path weights, e.g. '0.5+0.5i,0.5-0.5i'")
    p.add_argument("--window", default="-4,1,-3,3", help="re_min,re_max,im_min,im_max")
    p.add_argument("--res", type=int, default=400, help="cells per axis")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    common(p)

    p = sub.add_parser("paths", help="all full-order complex Euler paths with n steps")
    p.add_argument("--n", type=int, required=True)
    common(p)

    p = sub.add_parser("optimize", help="maximize the stable step over a spectrum")
    p.add_argument("--spectrum", help="CSV file with re,im rows")
    p.add_argument("--eigenvalues", help="inline list, e.g. 'i,2i'")
    p.add_argument("--stand-in", action="store_true", help="built-in second-quadrant cluster")
    p.add_argument("--stages", type=int, default=2)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--domain", choices=("real", "complex"), default="complex")
    p.add_argument("--tol-h", type=float, default=1e-4)
    p.add_argument("--tol-feas", type=float, default=1e-14)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("nls", help="soliton dt-sweep with the two-stage integrators")
    p.add_argument("--dts", default="0.014,0.007,0.0035,0.002,0.001")
    p.add_argument("--c", help="stage coefficients to run instead of the real/complex pair")
    p.add_argument("--n-modes", type=int, default=100)
    p.add_argument("--t-end", type=float, default=6.0)
    p.add_argument("--repeats", type=int, default=5, help="wall time is the median over this many runs")
    common(p)

    p = sub.add_parser("pi", help="projective integration on a stiff test problem")
    p.add_argument("--problem", choices=("prothero", "oscillator"), required=True)
    p.add_argument("--scheme", choices=("real", "complex"), required=True)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--xi", type=float, help="Prothero-Robinson imaginary part (default 20)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--lam", type=float, help="oscillator slow rate (default 1)")
    p.add_argument("--delta", type=float, help="oscillator frequency (default 22.913)")
    common(p)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    common(p)
    return ap


def _normalize_argv(argv: Sequence[str]) -> list[str]:
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_OPTIONS:
            nxt = next(it, None)
            if nxt is None:
                raise UsageError(f"{tok} needs a value")
            out.append(f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(ns).items() if k not in ("config", "command")}
    if ns.config:
        try:
            override = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(override, dict):
            raise UsageError("config file must hold a JSON object")
        if "artifact_version" in override and "config" in override:
            # a manifest written by an earlier run
            if override.get("command") != ns.command:
                raise UsageError(f"manifest is for '{override.get('command')}', not '{ns.command}'")
            override = override["config"]
        for key, value in override.items():
            k = key.replace("-", "_")
            if k not in cfg:
                raise UsageError(f"unknown config key {key!r} for '{ns.command}'")
            cfg[k] = value
    if ns.command == "pi":
        cfg["dt"] = cfg["dt"] if cfg.get("dt") is not None else (0.05 if cfg["problem"] == "prothero" else 0.1)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(_normalize_argv(argv))
        cfg = resolve_config(ns)
        out = Path(cfg["out"])
        return COMMANDS[ns.command](cfg, out)
    except (UsageError, GridSizeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CxStepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
