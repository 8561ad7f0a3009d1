"""Command-line interface: config ingestion, subcommand dispatch, reports.

All pipelines read a single JSON config (flags override top-level scalar
fields) and write CSV/JSON artifacts plus matplotlib figures next to them.
Exit codes: 0 success, 2 config validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fock, report, verification
from .characteristics import IntegrationError, integrate, caustic_indicator
from .kerr import KerrParams, kerr_audit
from .phase import CausticError, NewtonError, central_trajectory, phase_at
from .symbols import SymbolError, WickSymbol
from .transport import (
    ObservableSpec,
    QuadSpec,
    QuadratureError,
    asymptotic_from_jet,
    b0_from_jet,
    resolve_polynomial_initial,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    symbol: dict = field(default_factory=lambda: {"preset": "kerr", "omega": 1.0, "mu": 0.5})
    alpha0: list = field(default_factory=lambda: [[1.0, 0.0]])
    observable: dict = field(default_factory=lambda: {"m": [0], "q": [0]})
    times: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0])
    targets: dict = field(default_factory=lambda: {"ring": {"radius": 0.05, "count": 5}})
    hbar: list = field(default_factory=lambda: [0.1, 0.05])
    ode_tol: float = 1e-10
    newton_tol: float = 1e-12
    quad_tol: float = 1e-8
    tail_tol: float = 1e-10
    quad_nodes: int = 32
    cutoff: int | None = None
    out_dir: str = "."
    jobs: int = 1
    plot: bool = True

    def validate(self):
        errors = []
        for name in ("ode_tol", "newton_tol", "quad_tol", "tail_tol"):
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive")
        if not self.hbar or any(h <= 0 for h in self.hbar):
            errors.append("hbar must be a non-empty list of positive values")
        if not self.times or self.times[0] != 0.0:
            errors.append("times must start at 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            errors.append("times must be strictly increasing")
        if self.jobs < 1:
            errors.append("jobs must be at least 1")
        if self.quad_nodes < 2:
            errors.append("quad_nodes must be at least 2")
        if errors:
            raise ConfigError("; ".join(errors))

    @property
    def alpha0_vec(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.alpha0])

    def symbol_obj(self) -> WickSymbol:
        return WickSymbol.from_json_dict(self.symbol)

    def observable_spec(self) -> ObservableSpec:
        return ObservableSpec.create(self.observable["m"], self.observable["q"],
                                     self.alpha0_vec)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    doc = {}
    if path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = RunConfig()
    known = set(cfg.__dataclass_fields__)
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    env_jobs = os.environ.get("CSLAP_JOBS")
    if env_jobs and "jobs" not in doc and overrides.get("jobs") is None:
        cfg.jobs = int(env_jobs)
    cfg.validate()
    return cfg


def target_points(cfg: RunConfig, sym: WickSymbol, t: float) -> list[np.ndarray]:
    """Explicit points, or a ring around the central-trajectory point at time t."""
    spec = cfg.targets
    if "points" in spec:
        return [np.array([complex(re, im) for re, im in pt]).reshape(-1)
                for pt in spec["points"]]
    ring = spec["ring"]
    center = central_trajectory(sym, cfg.alpha0_vec, t, cfg.ode_tol).final.alpha
    out = []
    for i in range(int(ring["count"])):
        theta = 2.0 * np.pi * i / int(ring["count"])
        offset = ring["radius"] * np.exp(1j * theta)
        pt = center.copy()
        pt[0] = pt[0] + offset
        out.append(pt)
    return out


def _fock_space(cfg: RunConfig, sym: WickSymbol, hbar: float, alphas) -> fock.FockSpace:
    if cfg.cutoff is not None:
        cutoffs = (int(cfg.cutoff),) * sym.modes
    else:
        cutoffs = fock.cutoff_search(sym.modes, hbar, alphas, sym, cfg.tail_tol)
    return fock.FockSpace.create(sym.modes, cutoffs, hbar)


# -- point evaluation (module-level so worker pools can pickle it) -------

def _compare_point(args):
    cfg, sym, obs, t, target, hbar, space = args
    jet = phase_at(sym, cfg.alpha0_vec, target, t,
                   ode_tol=cfg.ode_tol, newton_tol=cfg.newton_tol)
    asym = asymptotic_from_jet(obs, jet, hbar)
    oracle = None
    if space is not None:
        oracle = fock.expectation(space, sym, obs, target, t, tail_tol=cfg.tail_tol)
    return jet, asym, oracle


def _map_points(cfg: RunConfig, items):
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_compare_point, items))
    return [_compare_point(it) for it in items]


# -- subcommands ---------------------------------------------------------

def cmd_flow(cfg: RunConfig, out: Path) -> None:
    sym = cfg.symbol_obj()
    alpha0 = cfg.alpha0_vec
    targets = target_points(cfg, sym, 0.0)
    inits = [alpha0] + targets
    labels = ["central"] + [f"point {i}" for i in range(len(targets))]
    trajectories = [integrate(sym, alpha0, a, cfg.times, tol=cfg.ode_tol) for a in inits]
    n = sym.modes
    header = (["t"]
              + [f"{p}_alpha_{k}" for k in range(n) for p in ("re", "im")]
              + [f"{p}_p_{k}" for k in range(n) for p in ("re", "im")]
              + ["action", "caustic_indicator", "label"])
    rows = []
    for traj, label in zip(trajectories, labels):
        for st in traj.states:
            row = [st.time]
            for k in range(n):
                row += [st.alpha[k].real, st.alpha[k].imag]
            for k in range(n):
                row += [st.p[k].real, st.p[k].imag]
            row += [st.action, caustic_indicator(st.frame), label]
            rows.append(row)
    report.write_csv(out / "flow.csv", header, rows)
    if cfg.plot:
        report.plot_flow(trajectories, labels, out / "flow.png")
    print(f"wrote {out / 'flow.csv'}")


def cmd_phase(cfg: RunConfig, out: Path) -> None:
    sym = cfg.symbol_obj()
    rows = []
    for t in cfg.times:
        for target in target_points(cfg, sym, t):
            jet = phase_at(sym, cfg.alpha0_vec, target, t,
                           ode_tol=cfg.ode_tol, newton_tol=cfg.newton_tol)
            rows.append([t, target[0].real, target[0].imag, jet.value,
                         jet.grad_p[0].real, jet.grad_p[0].imag,
                         jet.diagnostics["condition_number"],
                         jet.diagnostics["newton_iterations"]])
    report.write_csv(out / "phase.csv",
                     ["t", "re_alpha", "im_alpha", "S", "re_p", "im_p",
                      "condition_number", "newton_iterations"], rows)
    print(f"wrote {out / 'phase.csv'}")


def _transport_rows(cfg: RunConfig, with_oracle: bool):
    sym = cfg.symbol_obj()
    obs = cfg.observable_spec()
    rows = []
    for hbar in cfg.hbar:
        space = None
        if with_oracle:
            all_alphas = [cfg.alpha0_vec] + [a for t in cfg.times
                                            for a in target_points(cfg, sym, t)]
            space = _fock_space(cfg, sym, hbar, all_alphas)
        items = [(cfg, sym, obs, t, target, hbar, space)
                 for t in cfg.times for target in target_points(cfg, sym, t)]
        for (jet, asym, oracle), (_, _, _, t, target, _, _) in zip(_map_points(cfg, items), items):
            b0 = b0_from_jet(obs, jet)
            row = {"t": t, "alpha": target[0], "S": jet.value, "b0": b0,
                   "asymptotic": asym, "hbar": hbar, "oracle": oracle}
            if oracle is not None:
                row["residual"] = abs(asym - oracle) / (1.0 + abs(oracle))
            rows.append(row)
    return rows


def cmd_transport(cfg: RunConfig, out: Path) -> None:
    rows = _transport_rows(cfg, with_oracle=False)
    report.write_csv(out / "transport.csv",
                     ["t", "hbar", "re_alpha", "im_alpha", "S", "re_b0", "im_b0",
                      "re_asymptotic", "im_asymptotic"],
                     [[r["t"], r["hbar"], r["alpha"].real, r["alpha"].imag, r["S"],
                       r["b0"].real, r["b0"].imag, r["asymptotic"].real,
                       r["asymptotic"].imag] for r in rows])
    print(f"wrote {out / 'transport.csv'}")


def cmd_oracle(cfg: RunConfig, out: Path) -> None:
    sym = cfg.symbol_obj()
    obs = cfg.observable_spec()
    rows = []
    for hbar in cfg.hbar:
        all_alphas = [cfg.alpha0_vec] + [a for t in cfg.times
                                         for a in target_points(cfg, sym, t)]
        space = _fock_space(cfg, sym, hbar, all_alphas)
        for t in cfg.times:
            for target in target_points(cfg, sym, t):
                val = fock.expectation(space, sym, obs, target, t, tail_tol=cfg.tail_tol)
                tail = max(fock.coherent_tail(abs(a) ** 2, hbar, d)
                           for a, d in zip(target, space.cutoffs))
                rows.append([t, hbar, target[0].real, target[0].imag,
                             val.real, val.imag, space.cutoffs[0], tail])
    report.write_csv(out / "oracle.csv",
                     ["t", "hbar", "re_alpha", "im_alpha", "re_expectation",
                      "im_expectation", "cutoff", "tail_mass"], rows)
    print(f"wrote {out / 'oracle.csv'}")


def cmd_compare(cfg: RunConfig, out: Path) -> None:
    rows = _transport_rows(cfg, with_oracle=True)
    report.write_csv(out / "compare.csv",
                     ["t", "hbar", "re_alpha", "im_alpha", "S", "re_b0", "im_b0",
                      "re_asymptotic", "im_asymptotic", "re_oracle", "im_oracle",
                      "relative_residual"],
                     [[r["t"], r["hbar"], r["alpha"].real, r["alpha"].imag, r["S"],
                       r["b0"].real, r["b0"].imag, r["asymptotic"].real,
                       r["asymptotic"].imag, r["oracle"].real, r["oracle"].imag,
                       r["residual"]] for r in rows])
    if cfg.plot:
        report.plot_compare(rows, out / "compare.png")
    worst = max(r["residual"] for r in rows)
    print(f"wrote {out / 'compare.csv'} (worst relative residual {worst:.3e})")


def cmd_convergence(cfg: RunConfig, out: Path) -> None:
    sym = cfg.symbol_obj()
    obs = cfg.observable_spec()
    t = cfg.times[-1]
    center = central_trajectory(sym, cfg.alpha0_vec, t, cfg.ode_tol).final.alpha
    rep = verification.hbar_convergence(sym, list(obs.m), list(obs.q), cfg.alpha0_vec,
                                        center, t, cfg.hbar,
                                        tail_tol=cfg.tail_tol, ode_tol=cfg.ode_tol)
    report.write_csv(out / "convergence.csv", ["hbar", "residual", "cutoff"],
                     [[row["hbar"], row["residual"], row["cutoffs"][0]]
                      for row in rep.table])
    with open(out / "convergence.json", "w") as fh:
        json.dump({"slope": rep.slope, "exact": rep.exact,
                   "hbars": rep.hbars, "residuals": rep.residuals}, fh, indent=2)
    if cfg.plot:
        report.plot_convergence(rep, out / "convergence.png")
    print(f"wrote {out / 'convergence.csv'} "
          f"(slope {'exact' if rep.exact else format(rep.slope, '.4f')})")


def cmd_kerr(cfg: RunConfig, out: Path) -> None:
    doc = cfg.symbol
    if doc.get("preset") != "kerr":
        raise ConfigError("the kerr subcommand requires the kerr preset symbol")
    params = KerrParams(omega=float(doc["omega"]), mu=float(doc["mu"]),
                        alpha0=complex(cfg.alpha0_vec[0]))
    offsets = [0.0, 0.05, -0.05, 0.03 + 0.04j]
    audit = kerr_audit(params, [t for t in cfg.times if t > 0] or [0.5], offsets,
                       m=cfg.observable["m"][0], q=cfg.observable["q"][0],
                       ode_tol=cfg.ode_tol)
    header = ["t", "re_alpha_init", "im_alpha_init",
              "dev_flow_corrected", "dev_flow_printed", "dev_S", "dev_b0"]
    rows = [[r["t"], r["alpha_init"].real, r["alpha_init"].imag,
             r["dev_flow_corrected"], r["dev_flow_printed"], r["dev_S"], r["dev_b0"]]
            for r in audit["rows"]]
    report.write_csv(out / "kerr_audit.csv", header, rows)
    with open(out / "kerr_audit.json", "w") as fh:
        json.dump(audit["verdict"], fh, indent=2)
    if cfg.plot:
        report.plot_kerr_audit(audit, out / "kerr_audit.png")
    print(f"wrote {out / 'kerr_audit.csv'}; verdict: {audit['verdict']}")


def cmd_invariants(cfg: RunConfig, out: Path) -> None:
    rep = verification.invariant_suite({
        "symbol": cfg.symbol,
        "alpha0": cfg.alpha0_vec.tolist(),
        "t_final": cfg.times[-1],
        "ode_tol": cfg.ode_tol,
    })
    with open(out / "invariants.json", "w") as fh:
        json.dump(rep, fh, indent=2)
    for check in rep["checks"]:
        status = "pass" if check["pass"] else "FAIL"
        print(f"{status}  {check['check_name']}: measured {check['measured']:.3e} "
              f"(tolerance {check['tolerance']:.1e})")
    print(f"wrote {out / 'invariants.json'}")
    if not rep["passed"]:
        raise IntegrationError("invariant suite reported failures")


COMMANDS = {
    "flow": cmd_flow,
    "phase": cmd_phase,
    "transport": cmd_transport,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "convergence": cmd_convergence,
    "kerr": cmd_kerr,
    "invariants": cmd_invariants,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cslap",
        description="Laplace-type semiclassical asymptotics for coherent-state "
                    "expectation values, with an exact Fock-space oracle.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory (default: config out_dir)")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size")
    parser.add_argument("--ode-tol", type=float, default=None, dest="ode_tol")
    parser.add_argument("--newton-tol", type=float, default=None, dest="newton_tol")
    parser.add_argument("--tail-tol", type=float, default=None, dest="tail_tol")
    parser.add_argument("--cutoff", type=int, default=None)
    parser.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in
                 ("jobs", "ode_tol", "newton_tol", "tail_tol", "cutoff")}
    try:
        cfg = load_config(args.config, overrides)
        if args.no_plot:
            cfg.plot = False
        if args.out is not None:
            cfg.out_dir = args.out
    except (ConfigError, SymbolError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, NewtonError, CausticError, QuadratureError,
            fock.FockError, SymbolError) as exc:
        print(f"numeric failure in {args.command}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
