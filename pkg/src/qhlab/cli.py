"""``qhlab`` batch driver.

Usage::

    qhlab <command> [--config FILE] [--key value ...] --out DIR

Commands are ``evolve``, ``instability``, ``quantize``, ``angular`` and
``validate``.  Parameters come from the per-command schema below; a config
file holds ``key = value`` lines and command-line flags override it.

Every run writes ``manifest.txt`` into the output directory before any
computation and rewrites it at the end with the status and the list of
files produced.  Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    CalibrationError, ConfigurationError, InstabilityError, NodeError, QHLabError)
from .fields import ComplexField, GaussianPairParams, build_grid, gaussian_pair, to_hydro
from .hydro import (
    RHO_POSITIVE_MIN, MadelungState, cross_validate, madelung_iter, stability_limit,
    subgrid)
from .instability import InstabilityConfig, SweepRow, epsilon_sweep
from .io import read_keyvalue, write_hydro_field, write_keyvalue, write_table
from .plotting import PlotSpec, emit_plot
from .quantization import (
    DIAGNOSIS_COLUMNS, discretized_spectrum, hermite_spec, ee3_ratio, ee4_energy,
    legendre_ratio, legendre_tail_diagnosis, nonquantized_m_witness, quantized_lambda,
    radial_solution, series_tail_diagnosis, terminating_energies)
from .schrodinger import (
    EvolutionConfig, Potential1D, default_pair_grid, fringe_spacing,
    split_step_evolve)

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _choice(*options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return conv


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


# key -> (converter, default, help); None defaults are derived at run time
SCHEMAS = {
    "evolve": {
        "L": (float, 10.0, "half-separation of the packets"),
        "sigma": (float, 1.0, "packet dispersion"),
        "p0": (float, 2.0, "momentum of the right packet"),
        "n": (_int, 4096, "grid points (power of two)"),
        "box": (float, None, "grid half-width (default 4L + 10 sigma)"),
        "dt": (float, None, "time step (default 1e-3 spectral, dx^2/8 madelung)"),
        "t_final": (float, None, "final time (default L/p0, when the packets overlap)"),
        "snapshots": (_int, 10, "number of recorded intervals"),
        "direction": (_int, -1, "+1 right packet drifts away, -1 packets approach"),
        "picture": (_choice("spectral", "madelung"), "spectral", "integrator"),
    },
    "instability": {
        "profile": (_choice("plateau", "gaussian_pair"), "plateau", "density profile"),
        "eps": (_floats, "1e-1,1e-2,1e-3,1e-4", "comma-separated perturbation sizes"),
        "N": (_int, 2, "plateau exponent, density eps^N"),
        "ell": (float, 1.0, "half-width of the probe interval"),
        "sigma": (float, 1.0, "packet dispersion (gaussian_pair)"),
        "p0": (float, 0.0, "packet momentum (gaussian_pair)"),
        "n": (_int, 4096, "grid points"),
        "box": (float, 16.0, "grid half-width (plateau)"),
        "shoulder_width": (float, 1.0, "shoulder width (plateau)"),
    },
    "quantize": {
        "jmax": (_int, 10, "highest level"),
        "box": (float, 12.0, "half-width of the Dirichlet box"),
        "n": (_int, 4096, "grid points of the finite-difference oracle"),
        "energies": (_floats, "1.5,3.3,5.7", "energies to diagnose"),
        "x_probe": (float, 6.0, "probe position of the tail diagnosis"),
        "j_cut": (_int, 200, "series cut-off"),
    },
    "angular": {
        "jmax": (_int, 10, "highest angular index"),
        "lambdas": (_floats, "0.5,2.5,6.5,12.5", "eigenvalue candidates to diagnose"),
        "j_cut": (_int, 10000, "series cut-off"),
        "m": (_floats, "0,0.5,1", "azimuthal numbers for the 2D witness"),
    },
    "validate": {
        "case": (_choice("stationary", "displaced"), "stationary", "initial state"),
        "t_final": (float, 0.2, "final time"),
        "dt": (float, 1e-4, "time step"),
        "n": (_int, 2048, "reference grid points"),
        "box": (float, 20.48, "reference grid half-width"),
        "window": (_int, None, "hydro window points (default n/4 stationary, n displaced)"),
        "center": (float, 1.0, "initial centre (displaced)"),
        "width": (float, 3.5, "density standard deviation (displaced)"),
        "p0": (float, 0.0, "initial momentum (displaced)"),
        "kappa": (float, 1.0, "harmonic strength, V = kappa x^2"),
    },
}


@dataclass
class RunConfig:
    command: str
    parameters: dict
    output_dir: Path


@dataclass
class RunManifest:
    """Provenance record, rewritten in place as the run progresses."""

    command: str
    parameters: dict
    path: Path
    grid: str = ""
    started: str = ""
    ended: str = ""
    status: str = "running"
    outputs: list = field(default_factory=list)
    diagnosis: str = ""

    def write(self):
        items = {"command": self.command, "version": __version__}
        for k, v in self.parameters.items():
            items[f"param.{k}"] = ",".join(map(repr, v)) if isinstance(v, list) else v
        items.update(grid=self.grid, started=self.started, ended=self.ended,
                     status=self.status, outputs=", ".join(self.outputs),
                     diagnosis=self.diagnosis)
        write_keyvalue(self.path, items)

    def add(self, path):
        name = Path(path).name
        if name not in self.outputs:
            self.outputs.append(name)
        return path


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


class UsageError(QHLabError):
    """Bad command line or config file; ``out`` is set once the output directory is known."""

    def __init__(self, message, command=None, out=None):
        super().__init__(message)
        self.command = command
        self.out = out


def build_parser():
    p = argparse.ArgumentParser(prog="qhlab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, schema in SCHEMAS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="key = value file")
        sp.add_argument("--out", required=True, help="output directory")
        for key, (_, default, text) in schema.items():
            sp.add_argument(f"--{key}", dest=key, default=None,
                            help=f"{text} [default: {default}]")
    return p


def parse_config(argv):
    """Typed :class:`RunConfig` from command-line arguments."""
    args = build_parser().parse_args(argv)
    schema = SCHEMAS[args.command]
    raw = {}
    if args.config:
        try:
            values = read_keyvalue(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config: {exc}", args.command, args.out) from exc
        cmd = values.pop("command", args.command)
        if cmd != args.command:
            raise UsageError(f"config is for command {cmd!r}, not {args.command!r}",
                             args.command, args.out)
        unknown = sorted(set(values) - set(schema))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}",
                             args.command, args.out)
        raw.update(values)
    raw.update({k: getattr(args, k) for k in schema if getattr(args, k) is not None})
    params = {}
    for key, (conv, default, _) in schema.items():
        value = raw.get(key, default)
        if value is None:
            params[key] = None
            continue
        try:
            params[key] = conv(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {value!r} ({exc})",
                             args.command, args.out) from exc
    return RunConfig(args.command, params, Path(args.out))


def _check_params(cfg):
    """Command-specific preconditions that do not need any computation."""
    p = cfg.parameters
    if cfg.command == "instability":
        return InstabilityConfig(p["ell"], p["eps"], p["N"], p["profile"], p["sigma"],
                                 p["p0"], p["n"], p["box"], p["shoulder_width"])
    if cfg.command in ("quantize", "angular") and p["jmax"] < 0:
        raise ConfigurationError("jmax must be non-negative")
    if cfg.command == "evolve" and p["direction"] not in (1, -1):
        raise ConfigurationError("direction must be +1 or -1")
    return None


def _grid_text(g):
    return f"x_min={g.x_min!r}, x_max={g.x_max!r}, n={g.n}"


# ----------------------------------------------------------------- commands

def _run_evolve(cfg, man):
    p, out = cfg.parameters, cfg.output_dir
    params = GaussianPairParams(p["L"], p["sigma"], p["p0"])
    grid = (build_grid(-p["box"], p["box"], p["n"]) if p["box"]
            else default_pair_grid(params, p["n"]))
    man.grid = _grid_text(grid)
    t_final = p["t_final"]
    if t_final is None:
        if params.p0 == 0:
            raise ConfigurationError("t_final is required when p0 = 0")
        t_final = params.L / abs(params.p0)
    psi = gaussian_pair(params, grid, p["direction"])
    index, last = [], {}

    def snapshot(step, t, h):
        name = f"snapshot_{len(index):04d}.csv"
        write_hydro_field(man.add(out / name), h)
        index.append((step, t, name))
        last["h"] = h

    try:
        if p["picture"] == "spectral":
            dt = p["dt"] or 1e-3
            steps = max(1, int(round(t_final / dt)))
            every = max(1, steps // max(1, p["snapshots"]))
            man.write()
            cfg_ev = EvolutionConfig(dt, steps, every)
            for t, f in split_step_evolve(psi, Potential1D.free(grid), cfg_ev):
                snapshot(int(round(t / dt)), t, to_hydro(f))
        else:
            window = _hydro_window(psi)
            man.grid = f"{_grid_text(window)} (hydro window of {_grid_text(grid)})"
            dt = p["dt"] or stability_limit(window) / 2
            steps = max(1, int(round(t_final / dt)))
            every = max(1, steps // max(1, p["snapshots"]))
            man.write()
            lo, hi = _window_bounds(grid, window)
            state = MadelungState.from_field(ComplexField(window, psi.values[lo:hi]))
            for step, t, st in madelung_iter(state, Potential1D.free(window), dt, steps, every):
                snapshot(step, t, st.hydro)
    finally:
        if index:
            write_table(man.add(out / "index.csv"), ["step", "time", "filename"], index)

    summary = {"t_final": index[-1][1], "snapshots": len(index)}
    if p["picture"] == "spectral" and params.p0:
        center = -params.L if p["direction"] == -1 else 0.0
        spacing = fringe_spacing(last["h"], center, 4 * params.sigma)
        expected = 2 * np.pi / abs(params.p0)
        summary.update(fringe_spacing=spacing, expected_spacing=expected,
                       relative_error=abs(spacing - expected) / expected)
    write_keyvalue(man.add(out / "summary.txt"), summary)
    spec = PlotSpec("x", ["rho"], "x", "density",
                    [f"t = {index[0][1]:g}", f"t = {index[-1][1]:g}"])
    emit_plot([out / index[0][2], out / index[-1][2]], spec, man.add(out / "density.svg"))
    return summary


def _hydro_window(psi):
    """Largest centred power-of-two window where the density stays above the hydro floor."""
    rho = np.abs(psi.values) ** 2
    g = psi.grid
    n = g.n
    while n >= 16:
        try:
            w = subgrid(g, 0.5 * (g.x_min + g.x_max), n)
        except ConfigurationError:
            n //= 2
            continue
        lo, hi = _window_bounds(g, w)
        if np.all(rho[lo:hi] > RHO_POSITIVE_MIN):
            return w
        n //= 2
    raise NodeError("no window with density above the hydro floor")


def _window_bounds(grid, window):
    i0 = int(round((window.x_min - grid.x_min) / grid.dx))
    return i0, i0 + window.n


def _run_instability(cfg, man, icfg):
    out = cfg.output_dir
    man.write()
    res = epsilon_sweep(icfg)
    write_table(man.add(out / "sweep.csv"), SweepRow.COLUMNS, [r.as_row() for r in res.rows])
    write_table(man.add(out / "comparison.csv"),
                ["epsilon", "s_perturbed", "s_general", "rel_diff"],
                [[r.epsilon, r.s_perturbed, r.s_general,
                  (r.s_general - r.s_perturbed) / r.s_perturbed] for r in res.rows])
    write_keyvalue(man.add(out / "fit.txt"), res.fit.summary())
    if icfg.profile == "gaussian_pair":
        write_table(man.add(out / "separations.csv"), ["epsilon", "L"],
                    [[r.epsilon, r.separation] for r in res.rows])
    emit_plot(out / "sweep.csv",
              PlotSpec("epsilon", ["delta_s_exact", "delta_s_predicted"], "epsilon",
                       "phase shift", loglog=True, markers=True),
              man.add(out / "sweep.svg"))
    return res.fit.summary()


def _run_quantize(cfg, man):
    p, out = cfg.parameters, cfg.output_dir
    grid = build_grid(-p["box"], p["box"], p["n"])
    man.grid = _grid_text(grid) + " (Dirichlet walls)"
    man.write()
    series = terminating_energies(p["jmax"])
    oracle = discretized_spectrum(Potential1D.harmonic(grid), grid, len(series))
    rows = [[j, e, o, abs(e - o)] for j, (e, o) in enumerate(zip(series, oracle))]
    write_table(man.add(out / "spectrum.csv"), ["j", "E_series", "E_oracle", "abs_diff"], rows)
    spec = hermite_spec()
    ee = [[j, float(ee4_energy(j, spec)), float(ee3_ratio(j, ee4_energy(j, spec), spec))]
          for j in range(p["jmax"] + 1)]
    write_table(man.add(out / "ee_check.csv"), ["j", "E_formula", "ratio_at_E"], ee)
    diag = [series_tail_diagnosis(E, p["x_probe"], p["j_cut"]).row() for E in p["energies"]]
    write_table(man.add(out / "diagnosis.csv"), DIAGNOSIS_COLUMNS, diag)
    emit_plot(out / "spectrum.csv",
              PlotSpec("j", ["E_series", "E_oracle"], "level j", "energy", markers=True),
              man.add(out / "spectrum.svg"))
    return {"max_abs_diff": max(r[3] for r in rows)}


def _run_angular(cfg, man):
    p, out = cfg.parameters, cfg.output_dir
    man.write()
    js = range(p["jmax"] + 1)
    write_table(man.add(out / "legendre.csv"), ["j", "lambda", "ratio"],
                [[j, quantized_lambda(j), float(legendre_ratio(j, quantized_lambda(j)))]
                 for j in js])
    r = np.linspace(0.1, 5.0, 50)
    rad = []
    for j in js:
        lam = quantized_lambda(j)
        sol = radial_solution(lam, 1.0, r)
        scale = np.maximum(np.abs(lam * sol.R), np.abs(sol.R))
        rad.append([j, lam, float(np.max(np.abs(sol.residual_eq1) / scale)),
                    float(np.max(np.abs(sol.residual_eq2) / scale))])
    write_table(man.add(out / "radial.csv"),
                ["j", "lambda", "max_rel_residual_eq1", "max_rel_residual_eq2"], rad)
    diag = [legendre_tail_diagnosis(lam, p["j_cut"]).row() for lam in p["lambdas"]]
    write_table(man.add(out / "diagnosis.csv"), DIAGNOSIS_COLUMNS, diag)
    wit = []
    for m in p["m"]:
        w = nonquantized_m_witness(m)
        wit.append([m, w.rho_single_valued, w.current_single_valued,
                    w.wavefunction_single_valued])
    write_table(man.add(out / "witness.csv"),
                ["m", "rho_single_valued", "current_single_valued",
                 "wavefunction_single_valued"], wit)
    return {"max_radial_residual": max(max(r[2], r[3]) for r in rad)}


def _run_validate(cfg, man):
    p, out = cfg.parameters, cfg.output_dir
    grid = build_grid(-p["box"], p["box"], p["n"])
    v = Potential1D.harmonic(grid, p["kappa"])
    if p["case"] == "stationary":
        if p["kappa"] <= 0:
            raise ConfigurationError("the stationary case needs kappa > 0")
        # ground state of kappa x^2 is exp(-sqrt(kappa) x^2 / 2)
        a = np.sqrt(p["kappa"])
        psi = ComplexField(grid, np.exp(-a * grid.x**2 / 2)).normalize()
        window = subgrid(grid, 0.0, p["window"] or p["n"] // 4)
    else:
        c, s = p["center"], p["width"]
        psi = ComplexField(grid, np.exp(-(grid.x - c) ** 2 / (4 * s * s)
                                        + 1j * p["p0"] * grid.x)).normalize()
        window = subgrid(grid, 0.0, p["window"] or p["n"])
    man.grid = f"{_grid_text(window)} (hydro window of {_grid_text(grid)})"
    man.write()
    rep = cross_validate(psi, v, p["t_final"], p["dt"], window=window)
    write_table(man.add(out / "discrepancy.csv"), ["time", "sup_rho_diff", "sup_J_diff"],
                rep.rows())
    summary = {"max_rho_diff": rep.max_rho_diff, "max_J_diff": rep.max_J_diff,
               "completed": rep.completed}
    write_keyvalue(man.add(out / "summary.txt"), summary)
    emit_plot(out / "discrepancy.csv",
              PlotSpec("time", ["sup_rho_diff", "sup_J_diff"], "t", "sup-norm discrepancy",
                       logy=True),
              man.add(out / "discrepancy.svg"))
    if not rep.completed:
        raise _PartialFailure(rep.error)
    return summary


class _PartialFailure(QHLabError):
    pass


_RUNNERS = {"evolve": _run_evolve, "quantize": _run_quantize, "angular": _run_angular,
            "validate": _run_validate}


def run(cfg):
    """Execute ``cfg``; returns the process exit code."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.command, cfg.parameters, out / "manifest.txt", started=_now())
    man.write()
    code = EXIT_OK
    try:
        checked = _check_params(cfg)
        if cfg.command == "instability":
            summary = _run_instability(cfg, man, checked)
        else:
            summary = _RUNNERS[cfg.command](cfg, man)
        man.status = "ok"
        for k, v in summary.items():
            print(f"{k} = {v}")
    except (ConfigurationError, UsageError) as exc:
        man.status, code = "usage error", EXIT_USAGE
        man.diagnosis = str(exc)
    except (NodeError, InstabilityError, CalibrationError, _PartialFailure) as exc:
        kind = ("node formation" if isinstance(exc, (NodeError, _PartialFailure))
                else type(exc).__name__)
        man.status, code = f"failed: {kind}", EXIT_NUMERIC
        man.diagnosis = str(exc)
    finally:
        man.outputs = [n for n in man.outputs if (out / n).exists()]
        man.ended = _now()
        man.write()
    if code:
        print(f"qhlab {cfg.command}: {man.status}: {man.diagnosis}", file=sys.stderr)
    return code


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"qhlab: {exc}", file=sys.stderr)
        if exc.out:
            out = Path(exc.out)
            out.mkdir(parents=True, exist_ok=True)
            now = _now()
            RunManifest(exc.command, {}, out / "manifest.txt", started=now, ended=now,
                        status="usage error", diagnosis=str(exc)).write()
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
