"""Command-line front end.

``delaycert <command> --config run.ini --out results/ [--seed 42] [--set section.key=value ...]``

Exit status: 0 certified or passed, 1 well-formed negative verdict, 2 error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certificate import InequalityData, Verdict, chen_rate, halanay_map
from .config import Config, load_config, parse_config
from .errors import DelayCertError, ParseError
from .kernels import ExponentialScaled

__all__ = ["COMMANDS", "RunConfig", "run", "main"]

COMMANDS = ("certify", "simulate", "verify", "attractor", "halanay", "sectorial", "oracle", "demo")
OK, NEGATIVE, ERROR = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    input_path: str | None
    output_dir: str
    seed: int = 42
    overrides: list = field(default_factory=list)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command {self.command!r}; known: {list(COMMANDS)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParseError("seed must be an unsigned 64-bit integer")


@dataclass
class Outcome:
    report: dict
    status: int
    csv: dict = field(default_factory=dict)  # file name -> writer(path)


# ---------------------------------------------------------------------------
# builders


def _inequality(cfg: Config) -> InequalityData:
    """Kernel sections when present, else ``[halanay]``, else ``E = e^{-(t-s)}`` alone."""
    E = cfg.kernel("E")
    K1, K2 = cfg.kernel("K1"), cfg.kernel("K2")
    sec = "inequality"
    rho = cfg.get_float(sec, "rho", 0.0)
    r = cfg.get_float(sec, "r", 0.0)
    if E is None and K1 is None and K2 is None and cfg.has("halanay"):
        h = "halanay"
        data = halanay_map(cfg.get_float(h, "alpha"), cfg.get_float(h, "beta"), cfg.get_float(h, "r", r))
        return InequalityData(data.E, data.K1, None, cfg.get_float(h, "rho", rho), data.r)
    if E is None:
        E = ExponentialScaled(1.0, 1.0)
    try:
        return InequalityData(E, K1, K2, rho, r)
    except ValueError as exc:
        raise ParseError(f"{cfg.source}: {exc}") from None


def _system(cfg: Config):
    from .functions import Constant
    from .systems import LinearLag, ScalarFDE, superlinear_scalar

    sec = "system"
    kind = cfg.get_str(sec, "kind")
    if kind == "linear_lag":
        return LinearLag(cfg.get_float(sec, "a"), cfg.get_float(sec, "b"), cfg.get_float(sec, "lag", 1.0))
    if kind == "scalar_fde":
        return ScalarFDE(cfg.get_function(sec, "a"), cfg.get_function(sec, "b", 0.0), cfg.get_float(sec, "lag", 1.0),
                         variant=cfg.get_str(sec, "variant", "delay"))
    if kind == "superlinear":
        forcing = cfg.get_function(sec, "forcing", 0.0)
        return superlinear_scalar(cfg.get_float(sec, "alpha0", 1.0), cfg.get_float(sec, "alpha1", 0.1),
                                  cfg.get_float(sec, "lag", 1.0), forcing, cfg.get_float(sec, "p", 3.0))
    if kind == "periodic":
        return ScalarFDE(cfg.get_function(sec, "a"), Constant(cfg.get_float(sec, "beta", 0.0)),
                         cfg.get_float(sec, "lag", 1.0))
    raise ParseError(f"{cfg.source}: [system] kind {kind!r} is not one of linear_lag, scalar_fde, superlinear, "
                     "periodic")


def _y0(cfg):
    return cfg.get_float("inequality", "y0", cfg.get_float("halanay", "y0", 1.0))


def _verdict_status(v) -> int:
    return OK if str(v) == str(Verdict.GEAS) else NEGATIVE


# ---------------------------------------------------------------------------
# commands


def cmd_certify(cfg: Config, seed: int) -> Outcome:
    from .pipelines import certify

    data = _inequality(cfg)
    res = certify(data, _y0(cfg), cfg.get_float("inequality", "horizon", 100.0))
    rep = {"command": "certify", **res.as_report()}
    return Outcome(rep, _verdict_status(res.constants.verdict))


def cmd_halanay(cfg: Config, seed: int) -> Outcome:
    from .oracle import characteristic_root
    from .pipelines import certify

    h = "halanay"
    alpha, beta, r = cfg.get_float(h, "alpha"), cfg.get_float(h, "beta"), cfg.get_float(h, "r", 0.0)
    data = halanay_map(alpha, beta, r)
    data = InequalityData(data.E, data.K1, None, cfg.get_float(h, "rho", 0.0), r)
    res = certify(data, cfg.get_float(h, "y0", 1.0))
    rep = {"command": "halanay", "alpha": alpha, "beta": beta, "r": r, **res.as_report()}
    if 0 < beta < alpha:
        rep["chen_rate"] = chen_rate(alpha, beta, r)
    if r > 0:
        rep["characteristic_root"] = characteristic_root(alpha, beta, r)
    return Outcome(rep, _verdict_status(res.constants.verdict))


def cmd_simulate(cfg: Config, seed: int) -> Outcome:
    from .dde import aligned_step, integrate, random_histories
    from .systems import build_rhs

    sysobj = _system(cfg)
    spec = build_rhs(sysobj)
    s = "simulation"
    n = cfg.get_int(s, "n_histories", 10)
    radius = cfg.get_float(s, "radius", 1.0)
    tau = cfg.get_float(s, "tau", 0.0)
    t_end = cfg.get_float(s, "t_end", 20.0)
    h = aligned_step(cfg.get_float(s, "h", 0.01), spec.constant_lags)
    phi = random_histories(n, spec.max_lag, spec.dim, radius, seed)
    traj = integrate(spec, phi, tau, tau + t_end, h, on_blowup="drop")
    t, seg = traj.segnorm_profile(sub=1)
    rep = {"command": "simulate", "system": spec.name, "n_histories": n, "radius": radius, "tau": tau,
           "t_end": traj.t_end, "h": h, "n_dropped": int(np.sum(traj.dropped)),
           "final_segnorm_max": float(np.nanmax(seg[-1])) if (~traj.dropped).any() else None,
           "initial_norm_max": float(np.max(phi.sup_norm()))}

    def write_segnorms(path):
        header = ",".join(["t"] + [f"segnorm{k + 1}" for k in range(n)])
        np.savetxt(path, np.column_stack([t, seg]), delimiter=",", header=header, comments="", fmt="%.17g")

    return Outcome(rep, OK, {"trajectory.csv": traj.member(0).to_csv, "segnorms.csv": write_segnorms})


def cmd_verify(cfg: Config, seed: int) -> Outcome:
    from .pipelines import envelope_experiment

    sysobj = _system(cfg)
    from .systems import LinearLag

    if not isinstance(sysobj, LinearLag):
        raise ParseError(f"{cfg.source}: verify needs [system] kind = linear_lag")
    s = "simulation"
    try:
        exp = envelope_experiment(sysobj.a, sysobj.b, sysobj.lag, cfg.get_int(s, "n_histories", 200),
                                  cfg.get_float(s, "radius", 10.0), seed, cfg.get_float(s, "h", 0.01),
                                  cfg.get_float(s, "t_end", 30.0))
    except DelayCertError as exc:
        if exc.code == "certificate.NotGEAS":
            from .systems import linear_lag_certificate

            consts, _ = linear_lag_certificate(sysobj.a, sysobj.b, sysobj.lag)
            return Outcome({"command": "verify", **consts.as_report(), "passed": False}, NEGATIVE)
        raise
    rep = {"command": "verify", **exp.as_report(), "passed": exp.envelope.passed}
    return Outcome(rep, OK if exp.envelope.passed else NEGATIVE)


def cmd_attractor(cfg: Config, seed: int) -> Outcome:
    from .pipelines import superlinear_experiment

    s, a = "system", "attractor"
    kind = cfg.get_str(s, "kind", "superlinear")
    if kind != "superlinear":
        raise ParseError(f"{cfg.source}: attractor needs [system] kind = superlinear")
    exp = superlinear_experiment(
        cfg.get_float(s, "alpha0", 1.0), cfg.get_float(s, "alpha1", 0.1), cfg.get_float(s, "lag", 1.0),
        cfg.get_function(s, "forcing", 0.0), cfg.get_float(s, "p", 3.0), radius=cfg.get_float(a, "radius", 10.0),
        n_test=cfg.get_int(a, "n_test", 100), seed=seed, h=cfg.get_float(a, "h", 0.005),
        t_end=cfg.get_float(a, "t_end", 60.0), burn_in=cfg.get_float(a, "burn_in", 20.0),
        margin=cfg.get_float(a, "margin", 0.05), t_star=cfg.get_float(a, "t_star", 0.0),
        tol=cfg.get_float(a, "tol", 1e-3), n_cloud=cfg.get_int(a, "n_random", 16))
    rep = {"command": "attractor", **exp.as_report()}
    return Outcome(rep, OK if exp.passed else NEGATIVE, {"attractor_sample.csv": exp.pullback.attractor_sample.to_csv})


def cmd_sectorial(cfg: Config, seed: int) -> Outcome:
    from .sectorial import SectorialParams, kappa0_closed_form, sectorial_thresholds

    s = "sectorial"
    variant = cfg.get_str(s, "variant", "stable")
    try:
        params = SectorialParams(cfg.get_float(s, "alpha", 0.0), cfg.get_float(s, "beta"),
                                 cfg.get_float(s, "M_sect", 1.0), cfg.get_float(s, "L", 0.0),
                                 cfg.get_float(s, "C0", 0.0), cfg.get_float(s, "C1", 0.0))
    except ValueError as exc:
        raise ParseError(f"{cfg.source}: [sectorial] {exc}") from None
    v = sectorial_thresholds(params, variant)
    rep = {"command": "sectorial", **v.as_report(),
           "kappa0_closed_form": kappa0_closed_form(params.alpha, params.beta, variant),
           "L": params.L, "M_sect": params.M_sect}
    return Outcome(rep, OK if v.equilibrium_exists else NEGATIVE)


def cmd_oracle(cfg: Config, seed: int) -> Outcome:
    from .certificate import bounds, derive_constants
    from .kernels import kappa_sup, theta_sup
    from .oracle import characteristic_root, majorant_fixed_point

    data = _inequality(cfg)
    o = "oracle"
    y0 = cfg.get_float(o, "y0", _y0(cfg))
    table = majorant_fixed_point(data, y0, cfg.get_float(o, "t_max", 20.0), cfg.get_int(o, "n_grid", 2000))
    consts = derive_constants(theta_sup(data.E).upper, kappa_sup(data.K1, data.K2).upper)
    bd = bounds(consts, y0, data.rho)
    rep = {"command": "oracle", "majorant.max": float(table.values.max()),
           "majorant.final": float(table.values[-1]), "majorant.iterations": table.iterations,
           "majorant.residual": table.residual, **{f"bound.{k}": v for k, v in bd.items()},
           **{f"constants.{k}": v for k, v in consts.as_report().items()}}
    if cfg.raw(o, "a") is not None:
        a, b, lag = cfg.get_float(o, "a"), cfg.get_float(o, "b"), cfg.get_float(o, "lag", 1.0)
        root = characteristic_root(a, b, lag)
        rep["characteristic_root"] = root
        if 0 < b < a:
            rep["chen_rate"] = chen_rate(a, b, lag)
    return Outcome(rep, OK, {"majorant.csv": table.to_csv})


def cmd_demo(cfg: Config, seed: int) -> Outcome:
    from . import pipelines

    name = cfg.get_str("demo", "name", "neural")
    if name == "neural":
        nsec = "neural"
        kw = {}
        if cfg.has(nsec):
            for key in ("n_neurons", "mesh_points"):
                if cfg.raw(nsec, key) is not None:
                    kw[key] = cfg.get_int(nsec, key)
            for key in ("diffusion", "b", "T", "delays"):
                if cfg.raw(nsec, key) is not None:
                    kw[key] = cfg.get(nsec, key)
            if cfg.raw(nsec, "inputs") is not None:
                from .config import parse_function

                kw["inputs"] = [f if not isinstance(f, (int, float)) else parse_function(str(f))
                                for f in cfg.get_list(nsec, "inputs")]
            for key in ("h", "t_end"):
                if cfg.raw(nsec, key) is not None:
                    kw[key] = cfg.get_float(nsec, key)
            if cfg.raw(nsec, "activation") is not None:
                kw["activation"] = cfg.get_str(nsec, "activation")
        exp = pipelines.neural_experiment(**kw)
        return Outcome({"command": "demo", "demo": name, **exp.as_report()}, OK if exp.passed else NEGATIVE)
    if name == "periodic":
        s = "system"
        a = cfg.get_function(s, "a", "sine_plus_offset(amplitude=1, frequency=1, phase=0, offset=0.5)")
        exp = pipelines.periodic_experiment(a, cfg.get_float(s, "beta", 0.002), cfg.get_float(s, "lag", 1.0))
        ok = exp.decayed
        return Outcome({"command": "demo", "demo": name, **exp.as_report()}, OK if ok else NEGATIVE)
    if name == "linear_lag":
        return cmd_verify(cfg if cfg.has("system") else parse_config(
            "[system]\nkind = linear_lag\na = 3\nb = 1\nlag = 1\n", "<demo>"), seed)
    if name == "superlinear":
        return cmd_attractor(cfg, seed)
    if name == "dominance":
        exp = pipelines.dominance_experiment(seed=seed)
        ok = exp.within_ultimate and exp.dominates
        return Outcome({"command": "demo", "demo": name, **exp.as_report()}, OK if ok else NEGATIVE)
    raise ParseError(f"{cfg.source}: unknown demo {name!r}")


HANDLERS = {"certify": cmd_certify, "simulate": cmd_simulate, "verify": cmd_verify, "attractor": cmd_attractor,
            "halanay": cmd_halanay, "sectorial": cmd_sectorial, "oracle": cmd_oracle, "demo": cmd_demo}


# ---------------------------------------------------------------------------


def run(rc: RunConfig) -> int:
    """Execute one command, writing report files and CSVs; returns the exit status."""
    from .report import emit_report

    cfg = load_config(rc.input_path) if rc.input_path else Config({}, "<defaults>")
    cfg.apply_overrides(rc.overrides)
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    outcome = HANDLERS[rc.command](cfg, int(rc.seed))
    outcome.report["seed"] = int(rc.seed)
    outcome.report["status"] = outcome.status
    emit_report(outcome.report, out, f"delaycert {rc.command}")
    for name, writer in sorted(outcome.csv.items()):
        writer(out / name)
    return outcome.status


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delaycert", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", dest="config", default=None, help="INI configuration file")
    p.add_argument("--out", dest="out", default="delaycert_out", help="output directory (created if absent)")
    p.add_argument("--seed", type=int, default=42, help="unsigned 64-bit seed (default 42)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a configuration value; repeatable")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return ERROR if exc.code else OK
    try:
        status = run(RunConfig(args.command, args.config, args.out, args.seed, args.overrides))
    except DelayCertError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return ERROR
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
