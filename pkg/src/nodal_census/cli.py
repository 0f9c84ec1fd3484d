"""Batch front-end: predict | simulate | goe | barrier | validate.

Configuration comes from an optional JSON file with flat keys, overridden by
command-line flags; the environment variable NODAL_CENSUS_SEED overrides the
default seed (0).  Every emitted number carries provenance fields
{module, operation, seed, samples}.  Exit codes: 0 success, 1 usage error,
2 numeric failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

from .barrier import BarrierConfig, barrier_margins, estimate_omega_probability
from .census import run_census, slice_experiment
from .covariance import covariance_summary
from .ensemble import (
    EnsembleSpec,
    gaussian_profile,
    indicator_profile,
    make_harmonic,
    make_kostlan,
    make_prescribed,
    make_rfs,
)
from .errors import NodalCensusError
from .rmt import expected_minima, i_integral, leading_coeff_bound
from .validate import SCENARIOS, format_table, run_scenarios

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VALIDATION = 3

SEED_ENV_VAR = "NODAL_CENSUS_SEED"


@dataclass
class RunConfig:
    """Flat, JSON-serializable run configuration.

    File values are overridden by explicit CLI flags; ``seed`` falls back to
    the NODAL_CENSUS_SEED environment variable, then to 0.
    """

    command: str = ""
    kind: str = "rfs"
    n: int = 2
    d: int | None = None
    d_list: list[int] = field(default_factory=list)
    lam: float = 1.0
    psi_type: str = "indicator"
    psi_params: dict = field(default_factory=dict)
    observable: str = "nodal_components"
    trials: int = 100
    samples: int = 400_000
    seed: int = 0
    grid_c: int = 12
    grid_R: int | None = None
    threads: int = 1
    N: int = 3
    B: float = 1.0
    a_band: float = 0.75
    b_band: float = 1.0
    exact_i: bool = True
    flagged_tolerance: float = 0.05
    quick: bool = False
    scenarios: list[str] = field(default_factory=list)
    out: str | None = None
    csv: str | None = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise NodalCensusError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @property
    def degrees(self) -> list[int]:
        if self.d_list:
            return list(self.d_list)
        if self.d is None:
            raise NodalCensusError("a degree is required (--d or --d-list)")
        return [self.d]

    def ensemble(self, n: int | None = None, d: int | None = None) -> EnsembleSpec:
        n = self.n if n is None else n
        d = d if d is not None else self.degrees[0]
        if self.kind == "kostlan":
            return make_kostlan(n, d)
        if self.kind == "rfs":
            return make_rfs(n, d)
        if self.kind == "harmonic":
            return make_harmonic(n, d)
        if self.kind == "prescribed":
            return make_prescribed(self._psi(), self.lam, n, d)
        raise NodalCensusError(f"unknown ensemble kind {self.kind!r}")

    def _psi(self):
        if self.psi_type == "indicator":
            return indicator_profile(self.psi_params.get("a", 0.0),
                                     self.psi_params.get("b", 1.0))
        if self.psi_type == "gaussian":
            return gaussian_profile(self.psi_params.get("sigma2", 2.0))
        raise NodalCensusError(f"unknown psi type {self.psi_type!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nodal-census",
                     description="Invariant ensembles on spheres: predictions and censuses")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV_VAR} or 0)")
        p.add_argument("--threads", type=int, help="worker cap (results do not depend on it)")
        p.add_argument("--out", help="write JSON here instead of stdout")

    def ensemble_args(p):
        p.add_argument("--kind", choices=("kostlan", "rfs", "harmonic", "prescribed"))
        p.add_argument("--n", type=int, help="sphere dimension")
        p.add_argument("--d", type=int, help="degree")
        p.add_argument("--d-list", dest="d_list", type=int, nargs="+", help="degree ladder")
        p.add_argument("--lam", type=float, help="rescaling exponent (prescribed kind)")
        p.add_argument("--psi-type", dest="psi_type", choices=("indicator", "gaussian"))

    p = sub.add_parser("predict", help="closed-form predictions for an ensemble")
    common(p); ensemble_args(p)
    p.add_argument("--samples", type=int, help="Monte-Carlo samples for the GOE integral")
    p.add_argument("--mc-i", dest="exact_i", action="store_false", default=None,
                   help="force Monte-Carlo I even when a closed form exists")

    p = sub.add_parser("simulate", help="Monte-Carlo census of an observable")
    common(p); ensemble_args(p)
    p.add_argument("--observable", choices=("circle_zeros", "nodal_components",
                                            "extrema", "slice_zeros", "slice_experiment"))
    p.add_argument("--trials", type=int)
    p.add_argument("--grid-c", dest="grid_c", type=int, help="resolution multiple of d")
    p.add_argument("--grid-R", dest="grid_R", type=int, help="explicit grid resolution")
    p.add_argument("--csv", help="per-trial CSV output path")

    p = sub.add_parser("goe", help="largest-eigenvalue integral I(N, B)")
    common(p)
    p.add_argument("--N", type=int)
    p.add_argument("--B", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("barrier", help="barrier margins and event probability")
    common(p); ensemble_args(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--a-band", dest="a_band", type=float)
    p.add_argument("--b-band", dest="b_band", type=float)

    p = sub.add_parser("validate", help="run the validation scenario table")
    common(p)
    p.add_argument("--quick", action="store_true", default=None,
                   help="only the scenarios that finish within ~2 minutes")
    p.add_argument("--scenario", dest="scenarios", action="append",
                   help=f"run only the named scenario(s); known: {', '.join(SCENARIOS)}")
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    cfg = RunConfig.from_json(base) if base else RunConfig()
    cfg.command = args.command
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        if hasattr(cfg, key):
            setattr(cfg, key, value)
    if getattr(args, "seed", None) is None and "seed" not in base:
        cfg.seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    return cfg


def _provenance(module: str, operation: str, seed: int | None, samples: int | None) -> dict:
    return {"module": module, "operation": operation, "seed": seed, "samples": samples}


def _emit(payload: dict, cfg: RunConfig) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_predict(cfg: RunConfig) -> int:
    entries = []
    for d in cfg.degrees:
        e = cfg.ensemble(d=d)
        summary = covariance_summary(e)
        pred = expected_minima(e, cfg.samples, cfg.seed)
        entry = {
            "ensemble": e.to_json(),
            "covariance": summary.to_json(),
            "extrema": pred.to_json(),
            "minima_full_over_growth": pred.asymptotic_ratio,
        }
        if e.coherent and e.psi is not None:
            method = "exact" if (cfg.exact_i and e.n + 1 in (2, 3)) else "mc"
            sphere, projective = leading_coeff_bound(e.psi, e.lam, e.n, cfg.samples,
                                                     cfg.seed, method=method)
            entry["bounds"] = {"bound_sphere": sphere, "bound_projective": projective,
                               "i_method": method}
        else:
            entry["bounds"] = None
        entries.append(entry)
    _emit({"results": entries,
           "provenance": _provenance("rmt", "cmd_predict", cfg.seed, cfg.samples)}, cfg)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    e = cfg.ensemble()
    if cfg.observable == "slice_experiment":
        rep = slice_experiment(e, cfg.trials, cfg.seed, grid_c=cfg.grid_c, R=cfg.grid_R)
        payload = rep.to_json()
        flagged_fraction = payload["flagged_fraction"]
        if cfg.csv:
            _write_slice_csv(rep, cfg.csv)
    else:
        rep = run_census(e, cfg.observable, cfg.trials, cfg.seed,
                         grid_c=cfg.grid_c, R=cfg.grid_R, threads=cfg.threads)
        payload = rep.to_json()
        flagged_fraction = rep.flagged_fraction
        if cfg.csv:
            rep.write_csv(cfg.csv)
    payload["provenance"] = _provenance("census", "cmd_simulate", cfg.seed, cfg.trials)
    _emit(payload, cfg)
    return EXIT_OK if flagged_fraction <= cfg.flagged_tolerance else EXIT_NUMERIC


def _write_slice_csv(rep, path: str) -> None:
    import csv as _csv

    from .census import trial_seed_value

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["trial", "seed", "slice_zeros", "components", "flagged"])
        for t, (z, c, f) in enumerate(zip(rep.slice_zeros, rep.components, rep.flagged)):
            writer.writerow([t, trial_seed_value(rep.seed, t), z, c, int(f)])


def cmd_goe(cfg: RunConfig) -> int:
    est = i_integral(cfg.N, cfg.B, cfg.samples, cfg.seed)
    payload = est.to_json()
    payload["provenance"] = _provenance("rmt", "cmd_goe", cfg.seed, cfg.samples)
    _emit(payload, cfg)
    return EXIT_OK


def cmd_barrier(cfg: RunConfig) -> int:
    bcfg = BarrierConfig(a_band=cfg.a_band, b_band=cfg.b_band)
    degrees = cfg.degrees
    template = cfg.ensemble(d=degrees[0])
    margins = barrier_margins(template, bcfg, degrees)
    omegas = []
    for d in degrees:
        rep = estimate_omega_probability(cfg.ensemble(d=d), bcfg, cfg.trials, cfg.seed)
        omegas.append(rep.to_json())
    _emit({"margins": margins.to_json(), "omega": omegas,
           "provenance": _provenance("barrier", "cmd_barrier", cfg.seed, cfg.trials)}, cfg)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    results = run_scenarios(quick=cfg.quick, names=cfg.scenarios or None)
    print(format_table(results))
    if cfg.out:
        _emit({"scenarios": [r.to_json() for r in results],
               "provenance": _provenance("validate", "cmd_validate", cfg.seed, None)}, cfg)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


_DISPATCH = {
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "goe": cmd_goe,
    "barrier": cmd_barrier,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge_config(args)
        return _DISPATCH[cfg.command](cfg)
    except NodalCensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
