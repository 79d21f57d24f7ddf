"""Scenario orchestration and deterministic data export.

One subcommand per task; an optional JSON config file supplies defaults and
every field can be overridden by a flag.  All numeric output is written with
shortest round-trip decimals, and every file carries a header comment with
the config hash and integrator settings, so identical configs reproduce
byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import states
from .born import born_direct_grid, born_from_velocity, default_real_grid
from .dynamics import (
    IntegratorSettings,
    integrate_path,
    integrate_trajectory,
    path_constant,
)
from .errors import CqtrajError, ParseError, ValidationError
from .extended_probability import (
    MASK_DEFINED,
    MASK_LABELS,
    compare_methods,
    evaluate_closed_field,
    poirier_density,
    rho_at_point_via_trajectory,
)

TASKS = (
    "trajectory",
    "path",
    "born",
    "field-closed",
    "field-trajectory",
    "compare",
    "poirier",
    "figures",
)

_COMPLEX_RE = re.compile(
    r"^\s*(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?P<im>[+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?(?P<i>i)?\s*$"
)


def parse_complex_literal(text: str) -> complex:
    """Parse ``a+bi`` complex literals with decimal reals (also ``a``, ``bi``)."""
    s = text.strip().replace(" ", "")
    if s.endswith("i"):
        body = s[:-1]
        # split into real and imaginary decimal parts
        m = re.match(
            r"^(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
            r"(?P<im>[+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)$",
            body,
        )
        if m:
            return complex(float(m.group("re")), float(m.group("im")))
        if body in ("", "+"):
            return 1j
        if body == "-":
            return -1j
        try:
            return complex(0.0, float(body))
        except ValueError:
            raise ParseError(f"bad complex literal {text!r}")
    try:
        return complex(float(s), 0.0)
    except ValueError:
        raise ParseError(f"bad complex literal {text!r}")


def format_complex_literal(z: complex) -> str:
    return f"{z.real!r}{z.imag:+}i".replace("+", "+").replace("e", "e")


def parse_grid(text: str) -> Tuple[Tuple[float, float, int], Tuple[float, float, int]]:
    """Parse ``xr0:xr1:n,xi0:xi1:m``."""
    parts = text.split(",")
    if len(parts) != 2:
        raise ParseError(f"grid must be 'xr0:xr1:n,xi0:xi1:m', got {text!r}")
    out = []
    for part in parts:
        bits = part.split(":")
        if len(bits) != 3:
            raise ParseError(f"bad grid axis {part!r}")
        try:
            out.append((float(bits[0]), float(bits[1]), int(bits[2])))
        except ValueError as exc:
            raise ParseError(f"bad grid axis {part!r}") from exc
    return out[0], out[1]


@dataclass
class ScenarioConfig:
    task: str
    state: str
    seeds: List[complex] = field(default_factory=list)
    t_span: Optional[Tuple[float, float]] = None
    arc_length: Optional[float] = None
    grid: Optional[Tuple[Tuple[float, float, int], Tuple[float, float, int]]] = None
    points: int = 2001  # real-line grid size for the born task
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    out: str = "out"
    masked: bool = False

    def canonical(self) -> dict:
        return {
            "task": self.task,
            "state": self.state,
            "seeds": [[z.real, z.imag] for z in self.seeds],
            "t_span": list(self.t_span) if self.t_span else None,
            "arc_length": self.arc_length,
            "grid": [list(g) for g in self.grid] if self.grid else None,
            "points": self.points,
            "integrator": {
                "method": self.integrator.method,
                "rel_tol": self.integrator.rel_tol,
                "abs_tol": self.integrator.abs_tol,
                "max_step": (None if math.isinf(self.integrator.max_step)
                             else self.integrator.max_step),
                "node_guard": self.integrator.node_guard,
            },
            "masked": self.masked,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


_GRID_TASKS = {"field-closed", "field-trajectory", "poirier"}
_SEED_TASKS = {"trajectory", "path", "compare"}


def parse_config(doc) -> ScenarioConfig:
    """Validate a config mapping (or JSON text); report every violation at once."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: line {exc.lineno} col {exc.colno}")
    if not isinstance(doc, dict):
        raise ParseError("config document must be a JSON object")

    problems: List[str] = []
    known = {"task", "state", "seeds", "t_span", "arc_length", "grid", "points",
             "integrator", "out", "masked"}
    for key in doc:
        if key not in known:
            problems.append(f"unknown config field {key!r}")

    task = doc.get("task")
    if task not in TASKS:
        problems.append(f"task must be one of {TASKS}, got {task!r}")

    state = doc.get("state")
    if task == "figures":
        state = state or "ho:n=0"
    if not isinstance(state, str):
        problems.append("state must be a compact state string")
    else:
        try:
            states.parse_state(state)
        except (ParseError, ValidationError) as exc:
            problems.append(f"state: {exc}")

    seeds: List[complex] = []
    for item in doc.get("seeds", []) or []:
        try:
            seeds.append(parse_complex_literal(item) if isinstance(item, str)
                         else complex(item[0], item[1]))
        except (ParseError, TypeError, IndexError):
            problems.append(f"bad seed {item!r}")
    if task in _SEED_TASKS and not seeds:
        problems.append(f"task {task!r} needs at least one seed")

    t_span = None
    if doc.get("t_span") is not None:
        try:
            t0, t1 = (float(v) for v in doc["t_span"])
            if not t1 > t0:
                problems.append("t_span must be increasing and nondegenerate")
            t_span = (t0, t1)
        except (TypeError, ValueError):
            problems.append(f"bad t_span {doc['t_span']!r}")
    if task == "trajectory" and t_span is None:
        problems.append("task 'trajectory' needs t_span")

    arc_length = doc.get("arc_length")
    if arc_length is not None:
        try:
            arc_length = float(arc_length)
            if arc_length <= 0:
                problems.append("arc_length must be positive")
        except (TypeError, ValueError):
            problems.append(f"bad arc_length {doc['arc_length']!r}")
    if task == "path" and not arc_length:
        problems.append("task 'path' needs arc_length")

    grid = None
    if doc.get("grid") is not None:
        try:
            g = doc["grid"]
            if isinstance(g, str):
                grid = parse_grid(g)
            else:
                grid = ((float(g[0][0]), float(g[0][1]), int(g[0][2])),
                        (float(g[1][0]), float(g[1][1]), int(g[1][2])))
        except (ParseError, TypeError, ValueError, IndexError):
            problems.append(f"bad grid {doc['grid']!r}")
        if grid is not None:
            for lo, hi, cnt in grid:
                if cnt < 2:
                    problems.append(f"grid counts must be >= 2, got {cnt}")
                if not hi > lo:
                    problems.append(f"grid range [{lo}, {hi}] is degenerate")
    if task in _GRID_TASKS and grid is None:
        problems.append(f"task {task!r} needs a grid")

    points = doc.get("points", 2001)
    try:
        points = int(points)
        if points < 2:
            problems.append("points must be >= 2")
    except (TypeError, ValueError):
        problems.append(f"bad points {doc['points']!r}")

    integ = doc.get("integrator", {}) or {}
    settings = IntegratorSettings()
    try:
        settings = IntegratorSettings(
            method=integ.get("method", "rk45"),
            rel_tol=float(integ.get("rel_tol", 1e-10)),
            abs_tol=float(integ.get("abs_tol", 1e-10)),
            max_step=float(integ.get("max_step") or math.inf),
            node_guard=float(integ.get("node_guard", 1e-3)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"bad integrator settings: {exc}")

    if problems:
        raise ValidationError(problems)
    return ScenarioConfig(
        task=task, state=state, seeds=seeds, t_span=t_span, arc_length=arc_length,
        grid=grid, points=points, integrator=settings,
        out=str(doc.get("out", "out")), masked=bool(doc.get("masked", False)),
    )


def _fmt(v: float) -> str:
    return repr(float(v))


def _header_lines(config: ScenarioConfig, extra: Sequence[str] = ()) -> List[str]:
    s = config.integrator
    ms = "inf" if math.isinf(s.max_step) else _fmt(s.max_step)
    lines = [
        f"# cqtraj task={config.task} state={config.state} config_hash={config.config_hash()}",
        f"# integrator: method={s.method} rel_tol={_fmt(s.rel_tol)} abs_tol={_fmt(s.abs_tol)}"
        f" max_step={ms} node_guard={_fmt(s.node_guard)}",
    ]
    lines.extend(f"# {e}" for e in extra)
    return lines


def _write_csv(path: Path, header_lines: Sequence[str], columns: Sequence[str],
               rows) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def _task_trajectory(config: ScenarioConfig, spec) -> List[Path]:
    written = []
    for i, seed in enumerate(config.seeds):
        traj = integrate_trajectory(spec, seed, config.t_span, config.integrator)
        rows = (
            [_fmt(t), _fmt(x.real), _fmt(x.imag), _fmt(v.real), _fmt(v.imag),
             _fmt(_pc_or_nan(spec, x))]
            for t, x, v in zip(traj.t, traj.x, traj.xdot)
        )
        out = Path(f"{config.out}_seed{i}.csv" if len(config.seeds) > 1 else f"{config.out}.csv")
        _write_csv(out, _header_lines(config, [f"seed={format_complex_literal(seed)}"]),
                   ["t", "x_r", "x_i", "xdot_r", "xdot_i", "path_const"], rows)
        written.append(out)
    return written


def _pc_or_nan(spec, x) -> float:
    from .errors import UnsupportedState

    try:
        return path_constant(spec, complex(x))
    except UnsupportedState:
        return math.nan


def _task_path(config: ScenarioConfig, spec) -> List[Path]:
    written = []
    for i, seed in enumerate(config.seeds):
        curve = integrate_path(spec, seed, config.arc_length, config.integrator)
        rows = ([_fmt(s), _fmt(x.real), _fmt(x.imag)] for s, x in zip(curve.s, curve.x))
        out = Path(f"{config.out}_seed{i}.csv" if len(config.seeds) > 1 else f"{config.out}.csv")
        _write_csv(out, _header_lines(config, [f"seed={format_complex_literal(seed)}"]),
                   ["s", "x_r", "x_i"], rows)
        written.append(out)
    return written


def _task_born(config: ScenarioConfig, spec) -> List[Path]:
    pts = default_real_grid(spec, config.points, config.integrator.node_guard)
    pv = born_from_velocity(spec, pts, node_guard=config.integrator.node_guard)
    pd = born_direct_grid(spec, pts).normalize()
    rows = ([_fmt(x), _fmt(a), _fmt(b)] for x, a, b in zip(pts, pv.values, pd.values))
    out = Path(f"{config.out}.csv")
    _write_csv(out, _header_lines(config), ["x_r", "P_velocity", "P_direct"], rows)
    return [out]


def _field_rows(xr, xi, rho, mask, masked: bool):
    for j in range(len(xi)):
        for i in range(len(xr)):
            value = rho[j, i]
            if masked and mask[j, i] != MASK_DEFINED:
                value = 0.0
            yield [_fmt(xr[i]), _fmt(xi[j]), _fmt(value), MASK_LABELS[int(mask[j, i])]]


def _task_field_closed(config: ScenarioConfig, spec, out: Optional[Path] = None,
                       extra: Sequence[str] = ()) -> List[Path]:
    (xr0, xr1, nr), (xi0, xi1, ni) = config.grid
    fld = evaluate_closed_field(spec, _axis(xr0, xr1, nr), _axis(xi0, xi1, ni),
                                config.integrator.node_guard)
    out = out or Path(f"{config.out}.csv")
    _write_csv(out, _header_lines(config, extra), ["x_r", "x_i", "rho", "mask"],
               _field_rows(fld.xr, fld.xi, fld.rho, fld.mask, config.masked))
    return [out]


def _task_field_trajectory(config: ScenarioConfig, spec) -> List[Path]:
    (xr0, xr1, nr), (xi0, xi1, ni) = config.grid
    xr = _axis(xr0, xr1, nr)
    xi = _axis(xi0, xi1, ni)
    rho = np.zeros((ni, nr))
    mask = np.zeros((ni, nr), dtype=np.int8)
    for j, yi in enumerate(xi):
        for i, yr in enumerate(xr):
            rho[j, i], mask[j, i] = rho_at_point_via_trajectory(
                spec, complex(yr, yi), config.integrator)
    out = Path(f"{config.out}.csv")
    _write_csv(out, _header_lines(config), ["x_r", "x_i", "rho", "mask"],
               _field_rows(xr, xi, rho, mask, config.masked))
    return [out]


def _task_compare(config: ScenarioConfig, spec) -> List[Path]:
    report = compare_methods(spec, config.seeds, config.integrator)
    report["config_hash"] = config.config_hash()
    integ = report.get("integrator", {})
    if isinstance(integ.get("max_step"), float) and math.isinf(integ["max_step"]):
        integ["max_step"] = None
    out = Path(f"{config.out}.json")
    with open(out, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [out]


def _task_poirier(config: ScenarioConfig, spec) -> List[Path]:
    (xr0, xr1, nr), (xi0, xi1, ni) = config.grid
    xr = _axis(xr0, xr1, nr)
    xi = _axis(xi0, xi1, ni)

    def rows():
        for yi in xi:
            for yr in xr:
                rc, jd = poirier_density(spec, complex(yr, yi))
                yield [_fmt(yr), _fmt(yi), _fmt(rc.real), _fmt(rc.imag),
                       _fmt(jd.real), _fmt(jd.imag)]

    out = Path(f"{config.out}.csv")
    _write_csv(out, _header_lines(config),
               ["x_r", "x_i", "rho_c_re", "rho_c_im", "flux_div_re", "flux_div_im"],
               rows())
    return [out]


_FIGURES = (
    # (name, state string, grid)
    ("fig1_ho_n0", "ho:n=0,alpha=1,omega=1", ((-3.0, 3.0, 201), (-3.0, 3.0, 201))),
    ("fig2_ho_n1", "ho:n=1,alpha=1,omega=1", ((-3.0, 3.0, 201), (-3.0, 3.0, 201))),
    ("fig3_well_n1", f"well:n=1,a={math.pi!r}", ((0.0, math.pi, 201), (-1.0, 1.0, 201))),
    ("fig4_step", f"step:k=1,r={1.0 / math.sqrt(2.0)!r}", ((0.0, 2 * math.pi, 201), (-1.0, 1.0, 201))),
)

_FIGURE_NOTE = ("figure indices follow the closed-form state of each surface; "
                "published caption numbering for these surfaces differs by one "
                "quantum number and is not reproduced here")


def _task_figures(config: ScenarioConfig) -> List[Path]:
    written = []
    for name, state_str, grid in _FIGURES:
        spec = states.parse_state(state_str)
        for masked in (False, True):
            sub = ScenarioConfig(
                task="field-closed", state=state_str, grid=grid,
                integrator=config.integrator,
                out=f"{config.out}_{name}" + ("_masked" if masked else ""),
                masked=masked,
            )
            written.extend(
                _task_field_closed(sub, spec, extra=[_FIGURE_NOTE])
            )
    return written


def run_scenario(config: ScenarioConfig) -> List[Path]:
    """Execute one task; returns the list of files written."""
    if config.task == "figures":
        return _task_figures(config)
    spec = states.parse_state(config.state)
    if config.task == "trajectory":
        return _task_trajectory(config, spec)
    if config.task == "path":
        return _task_path(config, spec)
    if config.task == "born":
        return _task_born(config, spec)
    if config.task == "field-closed":
        return _task_field_closed(config, spec)
    if config.task == "field-trajectory":
        return _task_field_trajectory(config, spec)
    if config.task == "compare":
        return _task_compare(config, spec)
    if config.task == "poirier":
        return _task_poirier(config, spec)
    raise ValidationError(f"unknown task {config.task!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqtraj",
        description="complex quantum trajectories: simulate, verify, export grid data",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", help="JSON config file with scenario defaults")
        p.add_argument("--state", help="compact state string, e.g. ho:n=1,alpha=1,omega=1")
        p.add_argument("--seed", action="append", default=None,
                       help="complex seed a+bi (repeatable)")
        p.add_argument("--t-span", help="t0:t1")
        p.add_argument("--arc-length", type=float)
        p.add_argument("--grid", help="xr0:xr1:n,xi0:xi1:m")
        p.add_argument("--points", type=int, help="real-line grid size (born task)")
        p.add_argument("--tol", type=float, help="sets both rel and abs tolerance")
        p.add_argument("--method", choices=("rk45", "rk4"))
        p.add_argument("--max-step", type=float)
        p.add_argument("--node-guard", type=float)
        p.add_argument("--out", help="output path stem")
        p.add_argument("--masked", action="store_true",
                       help="zero rho outside the defined region in field CSVs")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    doc = {}
    try:
        if args.config:
            doc = json.loads(Path(args.config).read_text())
            if not isinstance(doc, dict):
                raise ParseError("config document must be a JSON object")
        doc["task"] = args.task
        if args.state:
            doc["state"] = args.state
        if args.seed:
            doc["seeds"] = args.seed
        if args.t_span:
            t0, _, t1 = args.t_span.partition(":")
            doc["t_span"] = [float(t0), float(t1)]
        if args.arc_length is not None:
            doc["arc_length"] = args.arc_length
        if args.grid:
            doc["grid"] = args.grid
        if args.points is not None:
            doc["points"] = args.points
        integ = dict(doc.get("integrator", {}) or {})
        if args.tol is not None:
            integ["rel_tol"] = integ["abs_tol"] = args.tol
        if args.method:
            integ["method"] = args.method
        if args.max_step is not None:
            integ["max_step"] = args.max_step
        if args.node_guard is not None:
            integ["node_guard"] = args.node_guard
        if integ:
            doc["integrator"] = integ
        if args.out:
            doc["out"] = args.out
        if args.masked:
            doc["masked"] = True
        if args.task == "figures":
            doc.setdefault("state", "ho:n=0")
        config = parse_config(doc)
    except (ParseError, ValidationError, ValueError, OSError) as exc:
        print(f"cqtraj: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        written = run_scenario(config)
    except (ParseError, ValidationError) as exc:
        print(f"cqtraj: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except CqtrajError as exc:
        print(f"cqtraj: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
