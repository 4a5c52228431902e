"""Phase-diagram engine over the (J, delta) plane.

Grids an order parameter, either the ground-state excitation variance at the
central site (equilibrium mode) or the time-averaged two-excitation
probability (dynamics mode), extracts the half-maximum boundary contour, and
serializes everything deterministically: the same spec produces a
bitwise-identical CSV regardless of worker count or execution order.
"""

import csv
import io
import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConvergenceError,
    IntegrationQualityError,
    JCLatticeError,
    StiffnessError,
)
from .groundstate import central_site, excitation_variance, sector_ground_state
from .lattice import LatticeParams
from .lindblad import (
    MIN_QUAD_SAMPLES,
    DissipationRates,
    averaged_p2,
    evolve,
    initial_polariton_product,
)

GRID_MODES = ("equilibrium", "dynamics")
FLAG_OK = "ok"

# default window of the phase map, log-spaced, in units of g
DEFAULT_J_RANGE = (1e-2, 1.0)
DEFAULT_DELTA_RANGE = (1e-2, 50.0)
DEFAULT_RESOLUTION = 64

# chain matching tolerance when assembling contour segments into polylines
_VERTEX_DECIMALS = 10


@dataclass(frozen=True)
class GridSpec:
    """A rectangular sweep over hopping strength and detuning."""

    j_values: tuple
    delta_values: tuple
    mode: str
    base: LatticeParams
    rates: DissipationRates | None = None
    T: float | None = None
    sample_count: int = 513

    def __post_init__(self):
        object.__setattr__(self, "j_values", tuple(float(j) for j in self.j_values))
        object.__setattr__(
            self, "delta_values", tuple(float(d) for d in self.delta_values)
        )
        if self.mode not in GRID_MODES:
            raise ValueError(f"mode must be one of {GRID_MODES}, got {self.mode!r}")
        for name, axis in (("j_values", self.j_values), ("delta_values", self.delta_values)):
            if len(axis) == 0:
                raise ValueError(f"{name} must be nonempty")
            if len(axis) > 1 and not all(
                b > a for a, b in zip(axis, axis[1:])
            ):
                raise ValueError(f"{name} must be strictly increasing")
        if any(j < 0 for j in self.j_values):
            raise ValueError("j_values must be nonnegative")
        if self.mode == "dynamics":
            if self.rates is None or self.T is None:
                raise ValueError("dynamics mode requires rates and T")
            if self.T <= 0:
                raise ValueError(f"averaging time must be positive, got {self.T}")
            if self.sample_count < MIN_QUAD_SAMPLES:
                raise ValueError(
                    f"dynamics grids need at least {MIN_QUAD_SAMPLES} samples"
                )

    @property
    def shape(self) -> tuple:
        return (len(self.j_values), len(self.delta_values))


@dataclass(frozen=True)
class PhaseGrid:
    """Computed order-parameter map with per-cell quality flags."""

    spec: GridSpec
    values: np.ndarray  # (len(j_values), len(delta_values))
    flags: tuple  # same shape, nested tuples of str
    boundary: tuple = field(default=())  # polylines, each an (n, 2) array

    def __post_init__(self):
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match spec {self.spec.shape}"
            )
        if len(self.flags) != self.spec.shape[0] or any(
            len(row) != self.spec.shape[1] for row in self.flags
        ):
            raise ValueError("flags shape does not match spec")
        clean = ~np.array(
            [[f.startswith("error") for f in row] for row in self.flags]
        )
        good = self.values[clean]
        if good.size and (not np.all(np.isfinite(good)) or good.min() < 0):
            raise ValueError("computed cells must be finite and nonnegative")

    @property
    def threshold(self) -> float:
        """Boundary level: half the largest computed order parameter."""
        finite = self.values[np.isfinite(self.values)]
        return 0.5 * float(finite.max()) if finite.size else float("nan")


def default_grid_spec(
    mode: str,
    base: LatticeParams,
    rates: DissipationRates | None = None,
    T: float | None = None,
    resolution: int = DEFAULT_RESOLUTION,
    sample_count: int = 513,
) -> GridSpec:
    """Log-spaced window covering the localization crossover."""
    j_axis = np.geomspace(*DEFAULT_J_RANGE, resolution)
    d_axis = np.geomspace(*DEFAULT_DELTA_RANGE, resolution)
    return GridSpec(
        j_values=tuple(j_axis),
        delta_values=tuple(d_axis),
        mode=mode,
        base=base,
        rates=rates,
        T=T,
        sample_count=sample_count,
    )


def _cell_params(base: LatticeParams, j: float, delta: float) -> LatticeParams:
    return replace(base, J=j, jc=base.jc.with_delta(delta))


def _rwa_horizon(j: float, delta: float, g: float) -> bool:
    # hopping beyond a quarter of the branch splitting leaves the regime
    # where the dressed-state picture of the boundary is meaningful
    return j > 0.5 * np.hypot(g, 0.5 * delta)


def _equilibrium_cell(spec: GridSpec, j: float, delta: float):
    lp = _cell_params(spec.base, j, delta)
    state = sector_ground_state(lp, n_total=lp.M)
    flags = []
    if state.near_degenerate:
        flags.append("degenerate")
    if _rwa_horizon(j, delta, lp.jc.g):
        flags.append("rwa-horizon")
    value = excitation_variance(state, central_site(lp.M))
    return value, ";".join(flags) or FLAG_OK


def _dynamics_cell(spec: GridSpec, j: float, delta: float):
    lp = _cell_params(spec.base, j, delta)
    trace = evolve(
        initial_polariton_product(lp),
        lp,
        spec.rates,
        spec.T,
        spec.sample_count,
    )
    flags = []
    if _rwa_horizon(j, delta, lp.jc.g):
        flags.append("rwa-horizon")
    return averaged_p2(trace, spec.T), ";".join(flags) or FLAG_OK


_ERROR_FLAGS = {
    ConvergenceError: "error:convergence",
    StiffnessError: "error:stiffness",
    IntegrationQualityError: "error:quality",
}


def _compute_cell(task):
    """Evaluate one grid cell; failures become flags, never exceptions."""
    spec, ji, di = task
    j = spec.j_values[ji]
    delta = spec.delta_values[di]
    worker = _equilibrium_cell if spec.mode == "equilibrium" else _dynamics_cell
    try:
        value, flag = worker(spec, j, delta)
    except Exception as exc:  # per-cell isolation
        for kind, flag in _ERROR_FLAGS.items():
            if isinstance(exc, kind):
                break
        else:
            prefix = "error" if isinstance(exc, JCLatticeError) else "error-unexpected"
            flag = f"{prefix}:{type(exc).__name__}"
        value = float("nan")
    return ji, di, float(value), flag


def _warm_dynamics_engine(base: LatticeParams):
    # compile (or load the cached) integrator once in the parent so forked
    # workers inherit it instead of racing on the compilation
    lp = replace(base, M=1, J=0.0, n_max=max(base.n_max, 2))
    evolve(
        initial_polariton_product(lp),
        lp,
        DissipationRates(0.0, 0.0),
        1e-3,
        2,
    )


def run_grid(spec: GridSpec, workers: int = 1) -> PhaseGrid:
    """Evaluate every cell and attach the half-maximum boundary.

    The cell list is mapped over a process pool when workers > 1; results
    are written back by index, so values are identical for any worker count.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    nj, nd = spec.shape
    tasks = [(spec, ji, di) for ji in range(nj) for di in range(nd)]

    if workers == 1 or len(tasks) == 1:
        results = [_compute_cell(t) for t in tasks]
    else:
        if spec.mode == "dynamics":
            _warm_dynamics_engine(spec.base)
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:
            ctx = multiprocessing.get_context()
        chunk = max(1, len(tasks) // (4 * workers))
        with ctx.Pool(processes=workers) as pool:
            results = pool.map(_compute_cell, tasks, chunksize=chunk)

    values = np.full(spec.shape, np.nan)
    flag_rows = [[FLAG_OK] * nd for _ in range(nj)]
    for ji, di, value, flag in results:
        values[ji, di] = value
        flag_rows[ji][di] = flag
    flags = tuple(tuple(row) for row in flag_rows)

    grid = PhaseGrid(spec=spec, values=values, flags=flags)
    return replace(grid, boundary=extract_boundary(grid))


# ---------------------------------------------------------------------------
# boundary extraction (marching squares)

# vertex bits: 1=(i,k) 2=(i,k+1) 4=(i+1,k+1) 8=(i+1,k); edges are keyed by
# the two vertex bits they join
_EDGES = {
    (1, 2): "top",
    (2, 4): "right",
    (4, 8): "bottom",
    (1, 8): "left",
}


def _interp(level, pa, pb):
    (xa, ya, va), (xb, yb, vb) = pa, pb
    t = 0.5 if vb == va else (level - va) / (vb - va)
    return (xa + t * (xb - xa), ya + t * (yb - ya))


def _cell_segments(level, corners):
    """Contour segments of one 2x2 block, standard 16-case lookup."""
    inside = sum(bit for bit, (_, _, v) in corners.items() if v >= level)
    if inside in (0, 15):
        return []
    cuts = {}
    for (a, b), name in _EDGES.items():
        a_in = bool(inside & a)
        if a_in != bool(inside & b):
            cuts[name] = _interp(level, corners[a], corners[b])
    if len(cuts) == 2:
        p, q = cuts.values()
        return [(p, q)]
    # saddle: connect by comparing the cell-center value against the level
    center = sum(v for (_, _, v) in corners.values()) / 4.0
    if (center >= level) == bool(inside & 1):
        return [(cuts["top"], cuts["right"]), (cuts["bottom"], cuts["left"])]
    return [(cuts["top"], cuts["left"]), (cuts["bottom"], cuts["right"])]


def extract_boundary(grid: PhaseGrid, level: float | None = None) -> tuple:
    """Marching-squares level set, by default at half the grid maximum.

    Returns a tuple of polylines, each an (n, 2) array of (j, delta)
    points; empty when the grid never crosses the level.  Blocks touching
    failed (NaN) cells are skipped.
    """
    if level is None:
        level = grid.threshold
    if not np.isfinite(level):
        return ()
    xs = np.asarray(grid.spec.j_values)
    ys = np.asarray(grid.spec.delta_values)
    v = grid.values
    segments = []
    for i in range(len(xs) - 1):
        for k in range(len(ys) - 1):
            block = v[i : i + 2, k : k + 2]
            if not np.all(np.isfinite(block)):
                continue
            corners = {
                1: (xs[i], ys[k], v[i, k]),
                2: (xs[i], ys[k + 1], v[i, k + 1]),
                4: (xs[i + 1], ys[k + 1], v[i + 1, k + 1]),
                8: (xs[i + 1], ys[k], v[i + 1, k]),
            }
            segments.extend(_cell_segments(level, corners))
    return _chain_segments(segments)


def _chain_segments(segments) -> tuple:
    """Join shared endpoints into polylines, deterministically."""
    def key(p):
        return (round(p[0], _VERTEX_DECIMALS), round(p[1], _VERTEX_DECIMALS))

    adjacency: dict = {}
    for idx, (p, q) in enumerate(segments):
        adjacency.setdefault(key(p), []).append(idx)
        adjacency.setdefault(key(q), []).append(idx)

    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        p, q = segments[start]
        chain = [p, q]
        for grow_end in (True, False):
            while True:
                tip = key(chain[-1] if grow_end else chain[0])
                nxt = next((i for i in adjacency.get(tip, ()) if not used[i]), None)
                if nxt is None:
                    break
                used[nxt] = True
                a, b = segments[nxt]
                point = b if key(a) == tip else a
                if grow_end:
                    chain.append(point)
                else:
                    chain.insert(0, point)
        polylines.append(np.array(chain))
    return tuple(polylines)


def boundary_delta_at(grid: PhaseGrid, j: float, level: float | None = None):
    """Detuning where the row nearest to j first crosses the level.

    Linear interpolation between the two straddling grid columns; None when
    the row never crosses.
    """
    if level is None:
        level = grid.threshold
    if not np.isfinite(level):
        return None
    xs = np.asarray(grid.spec.j_values)
    row = grid.values[int(np.argmin(np.abs(xs - j)))]
    ys = np.asarray(grid.spec.delta_values)
    s = row - level
    for k in range(len(ys) - 1):
        if not (np.isfinite(s[k]) and np.isfinite(s[k + 1])):
            continue
        if s[k] == 0.0:
            return float(ys[k])
        if s[k] * s[k + 1] < 0:
            t = s[k] / (s[k] - s[k + 1])
            return float(ys[k] + t * (ys[k + 1] - ys[k]))
    if s[-1] == 0.0:
        return float(ys[-1])
    return None


# ---------------------------------------------------------------------------
# serialization


def grid_metadata(grid: PhaseGrid) -> dict:
    """Flat key=value description of the spec, stable ordering."""
    spec = grid.spec
    meta = {
        "mode": spec.mode,
        "coupling_kind": spec.base.coupling_kind,
        "sites": spec.base.M,
        "n_max": spec.base.n_max,
        "g": spec.base.jc.g,
        "omega_c": spec.base.jc.omega_c,
        "j_count": len(spec.j_values),
        "j_min": spec.j_values[0],
        "j_max": spec.j_values[-1],
        "delta_count": len(spec.delta_values),
        "delta_min": spec.delta_values[0],
        "delta_max": spec.delta_values[-1],
    }
    if spec.mode == "dynamics":
        meta.update(
            gamma_q=spec.rates.gamma_q,
            gamma_c=spec.rates.gamma_c,
            T=spec.T,
            sample_count=spec.sample_count,
        )
    meta["threshold"] = grid.threshold
    return meta


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_grid_csv(grid: PhaseGrid, path, extra_metadata: dict | None = None):
    """Write `# key=value` metadata then row-major j,delta,value,flag rows.

    Floats are emitted with repr (shortest round-trip), so equal grids
    produce byte-identical files.
    """
    buf = io.StringIO()
    meta = grid_metadata(grid)
    if extra_metadata:
        meta.update(extra_metadata)
    for key, val in meta.items():
        buf.write(f"# {key}={_fmt(val)}\n")
    buf.write("j,delta,value,flag\n")
    for ji, j in enumerate(grid.spec.j_values):
        for di, d in enumerate(grid.spec.delta_values):
            buf.write(
                f"{_fmt(j)},{_fmt(d)},{_fmt(float(grid.values[ji, di]))},"
                f"{grid.flags[ji][di]}\n"
            )
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_grid_csv(path):
    """Inverse of write_grid_csv: (metadata, j_axis, delta_axis, values, flags)."""
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
            elif line.strip():
                rows.append(line.strip())
    header, *body = rows
    if header != "j,delta,value,flag":
        raise ValueError(f"unexpected CSV header {header!r}")
    parsed = list(csv.reader(body))
    j_axis = sorted({float(r[0]) for r in parsed})
    d_axis = sorted({float(r[1]) for r in parsed})
    j_pos = {j: i for i, j in enumerate(j_axis)}
    d_pos = {d: i for i, d in enumerate(d_axis)}
    values = np.full((len(j_axis), len(d_axis)), np.nan)
    flags = [[FLAG_OK] * len(d_axis) for _ in j_axis]
    for js, ds, vs, flag in parsed:
        ji, di = j_pos[float(js)], d_pos[float(ds)]
        values[ji, di] = float(vs)
        flags[ji][di] = flag
    return meta, np.array(j_axis), np.array(d_axis), values, tuple(
        tuple(row) for row in flags
    )


def write_boundary_csv(boundary: tuple, path):
    """One `j,delta` block per polyline, blocks separated by blank lines."""
    with open(path, "w", newline="") as fh:
        fh.write("j,delta\n")
        for p, line in enumerate(boundary):
            if p:
                fh.write("\n")
            for j, d in line:
                fh.write(f"{_fmt(float(j))},{_fmt(float(d))}\n")


# ---------------------------------------------------------------------------
# heatmap rendering

_VIRIDIS = (
    (0.000, (68, 1, 84)),
    (0.125, (72, 40, 120)),
    (0.250, (62, 74, 137)),
    (0.375, (49, 104, 142)),
    (0.500, (38, 130, 142)),
    (0.625, (31, 158, 137)),
    (0.750, (53, 183, 121)),
    (0.875, (109, 205, 89)),
    (1.000, (253, 231, 37)),
)
_NAN_COLOR = "#b0b0b0"


def _color(frac: float) -> str:
    frac = min(max(frac, 0.0), 1.0)
    for (fa, ca), (fb, cb) in zip(_VIRIDIS, _VIRIDIS[1:]):
        if frac <= fb:
            t = 0.0 if fb == fa else (frac - fa) / (fb - fa)
            rgb = [round(a + t * (b - a)) for a, b in zip(ca, cb)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*_VIRIDIS[-1][1])


def write_heatmap_svg(
    grid: PhaseGrid,
    path,
    *,
    show_boundary: bool = True,
    cell_px: int = 9,
):
    """Render the grid as an SVG heatmap, detuning across, hopping up.

    Axis tick labels are in units of g.  The half-maximum boundary is
    drawn as a white polyline when present.
    """
    nj, nd = grid.spec.shape
    left, bottom, top, right = 64, 46, 30, 14
    w = left + nd * cell_px + right
    h = top + nj * cell_px + bottom
    finite = grid.values[np.isfinite(grid.values)]
    vmax = float(finite.max()) if finite.size and finite.max() > 0 else 1.0

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for ji in range(nj):
        y = top + (nj - 1 - ji) * cell_px  # J grows upward
        for di in range(nd):
            x = left + di * cell_px
            val = grid.values[ji, di]
            fill = _NAN_COLOR if not np.isfinite(val) else _color(val / vmax)
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" '
                f'fill="{fill}"/>'
            )

    xs = np.asarray(grid.spec.j_values)
    ys = np.asarray(grid.spec.delta_values)

    def px(j, d):
        fj = float(np.interp(j, xs, np.arange(nj)))
        fd = float(np.interp(d, ys, np.arange(nd)))
        return (
            left + (fd + 0.5) * cell_px,
            top + (nj - 1 - fj + 0.5) * cell_px,
        )

    if show_boundary:
        for line in grid.boundary:
            pts = " ".join("{:.2f},{:.2f}".format(*px(j, d)) for j, d in line)
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="white" '
                f'stroke-width="1.5"/>'
            )

    def tick_label(axis, frac):
        return "{:.3g}".format(axis[round(frac * (len(axis) - 1))])

    x0, x1 = left, left + nd * cell_px
    y0, y1 = top + nj * cell_px, top
    for frac in (0.0, 0.5, 1.0):
        tx = x0 + frac * (x1 - x0)
        out.append(
            f'<text x="{tx:.1f}" y="{y0 + 16}" text-anchor="middle">'
            f"{tick_label(ys, frac)}</text>"
        )
        ty = y0 - frac * (y0 - y1)
        out.append(
            f'<text x="{x0 - 6}" y="{ty + 4:.1f}" text-anchor="end">'
            f"{tick_label(xs, frac)}</text>"
        )
    title = (
        "var(N) of the sector ground state"
        if grid.spec.mode == "equilibrium"
        else "time-averaged P2"
    )
    out.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{y0 + 34}" text-anchor="middle">'
        "detuning / g</text>"
    )
    out.append(
        f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">hopping J / g</text>'
    )
    out.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{top - 10}" text-anchor="middle">'
        f"{title}</text>"
    )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
