"""Command-line front end: phase diagrams, point dynamics, effective-parameter
tables, and the collective-mode validator.

All physics runs internally in units of the light-matter coupling g.  With
--units MHz, frequency-like inputs are ordinary frequencies f (converted as
omega = 2*pi*f) and times are microseconds; outputs convert back.  Every
flag can also be supplied through --config, a flat JSON object keyed by flag
name; command-line values win over the file, the file wins over defaults,
and the resolved set is echoed and embedded in every artifact.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import (
    CapacityError,
    ConvergenceError,
    IntegrationQualityError,
    NoCrossingError,
    StiffnessError,
)
from .lattice import LatticeParams
from .lindblad import (
    MIN_QUAD_SAMPLES,
    DissipationRates,
    averaged_p2,
    evolve,
    initial_polariton_product,
)
from .microscopic import (
    SpinEnsembleParams,
    commutator_defect,
    dicke_state,
    reduction_error,
)
from .polariton import JCParams, crossing_detuning, effective_coupling, effective_repulsion
from .sweep import GridSpec, run_grid, write_grid_csv, write_heatmap_svg

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_CAPACITY = 4

TWO_PI = 2.0 * math.pi

# single-excitation exactness and two-excitation scaling gates of the
# collective-mode validator
EXACT_REDUCTION_TOL = 1e-10
DEFECT_TOL = 1e-12


class UsageError(Exception):
    """Bad flag/config combination; maps to exit code 2."""


@dataclass(frozen=True)
class Units:
    """Conversion between input units and internal g = 1 units."""

    name: str  # "g" | "MHz"
    g_mhz: float  # carrier coupling in MHz, used only in MHz mode

    def freq_in(self, value: float) -> float:
        # omega = 2*pi*f for both value and g, so the 2*pi cancels
        return value / self.g_mhz if self.name == "MHz" else value

    def freq_out(self, value: float) -> float:
        return value * self.g_mhz if self.name == "MHz" else value

    def time_in(self, value: float) -> float:
        return value * TWO_PI * self.g_mhz if self.name == "MHz" else value

    def time_out(self, value: float):
        return value / (TWO_PI * self.g_mhz) if self.name == "MHz" else value


# defaults for frequency-like flags, per unit system; the MHz column is the
# experimental parameter set (g = 2pi x 10 MHz, gamma_q = 2pi x 1 MHz,
# gamma_c = 2pi x 0.1 MHz)
_FREQ_DEFAULTS = {
    "g": {
        "g": 1.0,
        "gamma_q": 0.1,
        "gamma_c": 0.01,
        "j": 0.1,
        "delta": 0.0,
        "omega_c": 0.0,
        "j_min": 0.01,
        "j_max": 1.0,
        "delta_min": 0.01,
        "delta_max": 50.0,
    },
    "MHz": {
        "g": 10.0,
        "gamma_q": 1.0,
        "gamma_c": 0.1,
        "j": 1.0,
        "delta": 0.0,
        "omega_c": 0.0,
        "j_min": 0.1,
        "j_max": 10.0,
        "delta_min": 0.1,
        "delta_max": 500.0,
    },
}


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or any(
        isinstance(v, (dict, list)) for v in data.values()
    ):
        raise UsageError("config must be a flat JSON object of scalars")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _resolve(args, fields: dict) -> dict:
    """flags > config file > defaults; unknown config keys are an error."""
    config = _load_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(config) - set(fields)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for name, (default, coerce) in fields.items():
        value = getattr(args, name, None)
        if value is None:
            value = config.get(name, default)
        if value is not None and coerce is not None:
            try:
                value = coerce(value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {name}: {value!r}") from exc
        resolved[name] = value
    return resolved


def _units_of(resolved: dict) -> Units:
    units = Units(resolved["units"], float(resolved["g"]))
    if units.name == "g" and units.g_mhz != 1.0:
        raise UsageError("in g units the coupling is 1 by definition; drop --g")
    if units.name == "MHz" and units.g_mhz <= 0:
        raise UsageError("--g must be positive in MHz mode")
    return units


def _coupling_kind(text: str) -> str:
    kind = str(text).upper()
    if kind not in ("QQ", "CC"):
        raise UsageError(f"coupling must be qq or cc, got {text!r}")
    return kind


def _parse_time(text, rates: DissipationRates, units: Units) -> float:
    """Absolute time in input units, or a ratio like 5/gq, 3/gc, 10/g.

    Ratio forms are unit independent; None falls back to 5/gamma_q when
    the qubit decays, else 50 (units of 1/g).
    """
    if text is None:
        return 5.0 / rates.gamma_q if rates.gamma_q > 0 else 50.0
    s = str(text).strip()
    if "/" in s:
        num, _, den = s.partition("/")
        try:
            factor = float(num)
        except ValueError as exc:
            raise UsageError(f"bad time expression {s!r}") from exc
        rate = {
            "gq": rates.gamma_q,
            "gamma_q": rates.gamma_q,
            "gc": rates.gamma_c,
            "gamma_c": rates.gamma_c,
            "g": 1.0,
        }.get(den.strip().lower())
        if rate is None:
            raise UsageError(f"unknown rate {den!r} in time expression {s!r}")
        if rate <= 0:
            raise UsageError(f"cannot form {s}: that rate is zero")
        return factor / rate
    try:
        return units.time_in(float(s))
    except ValueError as exc:
        raise UsageError(f"bad time expression {s!r}") from exc


def _echo(meta: dict):
    for key in sorted(meta):
        print(f"# {key}={meta[key]}")


def _run_meta(command: str, resolved: dict) -> dict:
    meta = {"command": command, "version": __version__}
    for key, value in resolved.items():
        # workers is execution machinery: embedding it would break bitwise
        # reproducibility across worker counts
        if value is not None and key not in ("output", "svg", "config", "workers"):
            meta[f"cfg_{key}"] = value
    return meta


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# phase-diagram


def _common_fields():
    return {
        "units": ("g", str),
        "g": (None, float),  # per-unit default applied after units are known
        "sites": (2, int),
        "coupling": ("qq", str),
        "n_max": (None, int),
        "omega_c": (None, float),
        "gamma_q": (None, float),
        "gamma_c": (None, float),
    }


def _freq_default(resolved, units, key):
    if resolved[key] is None:
        resolved[key] = _FREQ_DEFAULTS[units.name][key]
    return float(resolved[key])


def cmd_phase_diagram(args) -> int:
    fields = {
        **_common_fields(),
        "mode": ("equilibrium", str),
        "j_min": (None, float),
        "j_max": (None, float),
        "delta_min": (None, float),
        "delta_max": (None, float),
        "resolution": (64, int),
        "t_avg": (None, str),
        "samples": (513, int),
        "workers": (1, int),
        "output": ("phase_diagram.csv", str),
        "svg": (None, str),
        "config": (None, str),
    }
    resolved = _resolve(args, fields)
    if resolved["g"] is None:
        resolved["g"] = _FREQ_DEFAULTS[resolved["units"]]["g"]
    units = _units_of(resolved)
    mode = resolved["mode"]
    if mode not in ("equilibrium", "dynamics"):
        raise UsageError(f"mode must be equilibrium or dynamics, got {mode!r}")
    kind = _coupling_kind(resolved["coupling"])
    sites = resolved["sites"]
    n_max = resolved["n_max"] if resolved["n_max"] is not None else max(sites, 2)
    resolved["n_max"] = n_max

    omega_c = units.freq_in(_freq_default(resolved, units, "omega_c"))
    j_lo = units.freq_in(_freq_default(resolved, units, "j_min"))
    j_hi = units.freq_in(_freq_default(resolved, units, "j_max"))
    d_lo = units.freq_in(_freq_default(resolved, units, "delta_min"))
    d_hi = units.freq_in(_freq_default(resolved, units, "delta_max"))
    if not (0 < j_lo < j_hi) or not (0 < d_lo < d_hi):
        raise UsageError("grid ranges must satisfy 0 < min < max")

    try:
        base = LatticeParams(
            M=sites,
            coupling_kind=kind,
            J=j_lo,
            jc=JCParams(omega_q=omega_c, omega_c=omega_c, g=1.0),
            n_max=n_max,
        )
        rates = None
        t_avg = None
        if mode == "dynamics":
            rates = DissipationRates(
                gamma_q=units.freq_in(_freq_default(resolved, units, "gamma_q")),
                gamma_c=units.freq_in(_freq_default(resolved, units, "gamma_c")),
            )
            t_avg = _parse_time(resolved["t_avg"], rates, units)
        spec = GridSpec(
            j_values=tuple(np.geomspace(j_lo, j_hi, resolved["resolution"])),
            delta_values=tuple(np.geomspace(d_lo, d_hi, resolved["resolution"])),
            mode=mode,
            base=base,
            rates=rates,
            T=t_avg,
            sample_count=resolved["samples"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    meta = _run_meta("phase-diagram", resolved)
    if t_avg is not None:
        meta["t_avg_internal"] = t_avg
    _echo(meta)
    grid = run_grid(spec, workers=resolved["workers"])
    write_grid_csv(grid, resolved["output"], extra_metadata=meta)
    print(f"wrote {resolved['output']}")
    if resolved["svg"]:
        write_heatmap_svg(grid, resolved["svg"])
        print(f"wrote {resolved['svg']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dynamics


def cmd_dynamics(args) -> int:
    fields = {
        **_common_fields(),
        "j": (None, float),
        "delta": (None, float),
        "t_final": (None, str),
        "samples": (1025, int),
        "output": ("dynamics.csv", str),
        "config": (None, str),
    }
    resolved = _resolve(args, fields)
    if resolved["g"] is None:
        resolved["g"] = _FREQ_DEFAULTS[resolved["units"]]["g"]
    units = _units_of(resolved)
    kind = _coupling_kind(resolved["coupling"])
    sites = resolved["sites"]
    n_max = resolved["n_max"] if resolved["n_max"] is not None else max(sites, 2)
    resolved["n_max"] = n_max

    j = units.freq_in(_freq_default(resolved, units, "j"))
    delta = units.freq_in(_freq_default(resolved, units, "delta"))
    omega_c = units.freq_in(_freq_default(resolved, units, "omega_c"))
    rates = DissipationRates(
        gamma_q=units.freq_in(_freq_default(resolved, units, "gamma_q")),
        gamma_c=units.freq_in(_freq_default(resolved, units, "gamma_c")),
    )
    t_final = _parse_time(resolved["t_final"], rates, units)

    try:
        lp = LatticeParams(
            M=sites,
            coupling_kind=kind,
            J=j,
            jc=JCParams(omega_q=omega_c + delta, omega_c=omega_c, g=1.0),
            n_max=n_max,
        )
        trace = evolve(
            initial_polariton_product(lp), lp, rates, t_final, resolved["samples"]
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    meta = _run_meta("dynamics", resolved)
    meta["t_final_internal"] = t_final
    meta["j_internal"] = j
    meta["delta_internal"] = delta
    if resolved["samples"] >= MIN_QUAD_SAMPLES:
        meta["pbar2"] = averaged_p2(trace, t_final)
    _echo(meta)

    header = (
        ["t"]
        + [f"p2_site_{k + 1}" for k in range(sites)]
        + ["p2_mean", "n_total", "trace_dev", "min_eig", "purity"]
    )
    t_out = units.time_out(trace.times)
    with open(resolved["output"], "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        fh.write(",".join(header) + "\n")
        for i in range(len(trace.times)):
            row = (
                [t_out[i]]
                + list(trace.p2_per_site[i])
                + [
                    trace.p2_mean[i],
                    trace.n_total_expect[i],
                    trace.trace_dev[i],
                    trace.min_eig[i],
                    trace.purity[i],
                ]
            )
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    print(f"wrote {resolved['output']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# effective-params


def cmd_effective_params(args) -> int:
    fields = {
        "units": ("g", str),
        "g": (None, float),
        "j": (None, float),
        "delta_min": (0.0, float),
        "delta_max": (None, float),
        "points": (16, int),
        "output": (None, str),
        "config": (None, str),
    }
    resolved = _resolve(args, fields)
    if resolved["g"] is None:
        resolved["g"] = _FREQ_DEFAULTS[resolved["units"]]["g"]
    units = _units_of(resolved)
    if resolved["delta_max"] is None:
        resolved["delta_max"] = 30.0 if units.name == "g" else 300.0
    if resolved["points"] < 2:
        raise UsageError("need at least 2 table points")
    j = units.freq_in(_freq_default(resolved, units, "j"))
    d_lo = units.freq_in(float(resolved["delta_min"]))
    d_hi = units.freq_in(float(resolved["delta_max"]))
    if not d_hi > d_lo >= 0:
        raise UsageError("detuning range must satisfy 0 <= min < max")

    jc = JCParams(omega_q=0.0, omega_c=0.0, g=1.0)
    crossings = {}
    for kind in ("QQ", "CC"):
        try:
            crossings[kind] = crossing_detuning(j, jc, kind)
        except NoCrossingError:
            crossings[kind] = None

    meta = _run_meta("effective-params", resolved)
    for kind, value in crossings.items():
        meta[f"crossing_{kind.lower()}"] = (
            "none" if value is None else units.freq_out(value)
        )
    _echo(meta)

    deltas = np.linspace(d_lo, d_hi, resolved["points"])
    rows = []
    for d in deltas:
        p = jc.with_delta(float(d))
        rows.append(
            (
                units.freq_out(float(d)),
                units.freq_out(effective_repulsion(p)),
                units.freq_out(effective_coupling(j, p, "QQ")),
                units.freq_out(effective_coupling(j, p, "CC")),
            )
        )

    header = ("delta", "repulsion", "j_eff_qq", "j_eff_cc")
    print("{:>12} {:>12} {:>12} {:>12}".format(*header))
    for row in rows:
        print("{:>12.6g} {:>12.6g} {:>12.6g} {:>12.6g}".format(*row))
    for kind in ("QQ", "CC"):
        shown = meta[f"crossing_{kind.lower()}"]
        shown = shown if shown == "none" else f"{shown:.6g}"
        print(f"crossing_{kind.lower()} = {shown}")

    if resolved["output"]:
        with open(resolved["output"], "w", newline="") as fh:
            for key in sorted(meta):
                fh.write(f"# {key}={meta[key]}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        print(f"wrote {resolved['output']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate-collective


def _spin_list(text) -> list:
    try:
        spins = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --spins list {text!r}") from exc
    if not spins or any(n < 1 for n in spins):
        raise UsageError("--spins needs positive integers")
    return spins


def cmd_validate_collective(args) -> int:
    fields = {
        "spins": ("4,8,12", str),
        "excitations": (1, int),
        "couplings": ("uniform", str),
        "g_collective": (0.5, float),
        "t_final": (5.0, float),
        "samples": (101, int),
        "seed": (7, int),
        "output": (None, str),
        "config": (None, str),
    }
    resolved = _resolve(args, fields)
    spins = _spin_list(resolved["spins"])
    excitations = resolved["excitations"]
    scheme = resolved["couplings"]
    if scheme not in ("uniform", "random"):
        raise UsageError(f"couplings must be uniform or random, got {scheme!r}")
    if excitations < 1:
        raise UsageError("--excitations must be >= 1")
    for n in spins:
        if excitations > n:
            raise UsageError(
                f"{n} spins cannot hold {excitations} excitations; "
                "lower --excitations"
            )

    g_coll = resolved["g_collective"]
    rng = np.random.default_rng(resolved["seed"])
    meta = _run_meta("validate-collective", resolved)
    _echo(meta)

    lines = []
    checks = []
    errors = []
    for n_spins in spins:
        if scheme == "uniform":
            couplings = np.full(n_spins, g_coll / math.sqrt(n_spins))
        else:
            raw = rng.uniform(0.5, 1.5, n_spins)
            couplings = raw * (g_coll / np.linalg.norm(raw))
        p = SpinEnsembleParams(
            omega_q=0.0, omega_c=0.0, couplings=tuple(couplings)
        )
        defect = commutator_defect(dicke_state(1, p).vector, p)
        red = reduction_error(
            p, excitations, resolved["t_final"], resolved["samples"]
        )
        errors.append(red.max_error)
        line = (
            f"N={n_spins} g_collective={p.g_collective:.6g} "
            f"defect={defect:.3e} reduction_error={red.max_error:.3e} "
            f"leakage={red.leakage[-1]:.3e}"
        )
        if scheme == "uniform":
            miss = abs(defect + 2.0 / n_spins)
            line += f" defect_vs_-2/N={miss:.1e}"
            checks.append(("defect -2/N", miss <= DEFECT_TOL))
        lines.append(line)

    if excitations == 1:
        checks.append(
            ("single-excitation exactness", max(errors) <= EXACT_REDUCTION_TOL)
        )
    else:
        checks.append(("reduction error bounded", max(errors) < 1.0))
        if len(errors) >= 2:
            decreasing = all(b < a for a, b in zip(errors, errors[1:]))
            checks.append(("error decreases with N", decreasing))

    passed = all(ok for _, ok in checks)
    for line in lines:
        print(line)
    for name, ok in checks:
        print(f"check {name}: {'ok' if ok else 'FAILED'}")
    print("PASS" if passed else "FAIL")

    if resolved["output"]:
        with open(resolved["output"], "w") as fh:
            for key in sorted(meta):
                fh.write(f"# {key}={meta[key]}\n")
            fh.write("\n".join(lines) + "\n")
            fh.write("PASS\n" if passed else "FAIL\n")
    return EXIT_OK if passed else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jclattice",
        description="Jaynes-Cummings lattice phase diagrams and dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON file supplying flag defaults")
        p.add_argument("--units", choices=("g", "MHz"), help="input unit system")
        p.add_argument("--g", type=float, help="coupling g (MHz mode only)")
        p.add_argument("--sites", type=int, help="number of lattice sites")
        p.add_argument("--coupling", help="inter-site coupling kind: qq or cc")
        p.add_argument("--n-max", type=int, dest="n_max", help="Fock cutoff per site")
        p.add_argument("--omega-c", type=float, dest="omega_c", help="cavity frequency")
        p.add_argument("--gamma-q", type=float, dest="gamma_q", help="qubit decay rate")
        p.add_argument("--gamma-c", type=float, dest="gamma_c", help="cavity decay rate")
        p.add_argument("--output", "-o", help="output file path")

    p_grid = sub.add_parser("phase-diagram", help="sweep the (J, delta) plane")
    common(p_grid)
    p_grid.add_argument("--mode", help="equilibrium or dynamics")
    p_grid.add_argument("--j-min", type=float, dest="j_min")
    p_grid.add_argument("--j-max", type=float, dest="j_max")
    p_grid.add_argument("--delta-min", type=float, dest="delta_min")
    p_grid.add_argument("--delta-max", type=float, dest="delta_max")
    p_grid.add_argument("--resolution", type=int, help="cells per axis")
    p_grid.add_argument("--t-avg", dest="t_avg", help="averaging time, e.g. 5/gq")
    p_grid.add_argument("--samples", type=int, help="time samples per cell")
    p_grid.add_argument("--workers", type=int, help="parallel worker processes")
    p_grid.add_argument("--svg", help="also render a heatmap to this path")
    p_grid.set_defaults(func=cmd_phase_diagram)

    p_dyn = sub.add_parser("dynamics", help="evolve one (J, delta) point")
    common(p_dyn)
    p_dyn.add_argument("--j", type=float, help="hopping strength")
    p_dyn.add_argument("--delta", type=float, help="qubit-cavity detuning")
    p_dyn.add_argument("--t-final", dest="t_final", help="horizon, e.g. 5/gq or 50")
    p_dyn.add_argument("--samples", type=int, help="recorded time samples")
    p_dyn.set_defaults(func=cmd_dynamics)

    p_eff = sub.add_parser(
        "effective-params", help="dressed-frame repulsion/coupling table"
    )
    p_eff.add_argument("--config", help="flat JSON file supplying flag defaults")
    p_eff.add_argument("--units", choices=("g", "MHz"))
    p_eff.add_argument("--g", type=float)
    p_eff.add_argument("--j", type=float, help="hopping strength")
    p_eff.add_argument("--delta-min", type=float, dest="delta_min")
    p_eff.add_argument("--delta-max", type=float, dest="delta_max")
    p_eff.add_argument("--points", type=int, help="table rows")
    p_eff.add_argument("--output", "-o")
    p_eff.set_defaults(func=cmd_effective_params)

    p_val = sub.add_parser(
        "validate-collective", help="spin ensemble vs collective-mode reduction"
    )
    p_val.add_argument("--config", help="flat JSON file supplying flag defaults")
    p_val.add_argument("--spins", help="comma list of ensemble sizes, e.g. 4,8,12")
    p_val.add_argument("--excitations", type=int, help="initial excitation number")
    p_val.add_argument("--couplings", help="uniform or random")
    p_val.add_argument(
        "--g-collective", type=float, dest="g_collective", help="target collective coupling"
    )
    p_val.add_argument("--t-final", type=float, dest="t_final", help="comparison horizon")
    p_val.add_argument("--samples", type=int, help="comparison samples")
    p_val.add_argument("--seed", type=int, help="rng seed for random couplings")
    p_val.add_argument("--output", "-o")
    p_val.set_defaults(func=cmd_validate_collective)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConvergenceError, StiffnessError, IntegrationQualityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
