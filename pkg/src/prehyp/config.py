"""Scenario configuration: a small sectioned key = value text format.

Grammar:

    [section]
    key = value        # trailing comments allowed

Values are numbers, bare words, or bracketed comma lists; lists nest, so
matrices are written [[a, b], [c, d]].  Entries that are not numbers are
kept as strings and later parsed as coefficient expressions.

A scenario names a spacetime, a bundle rank, an operator pair (either a
preset or explicit coefficient matrices), a grid, windowed initial data
and optionally a windowed source for driven (Green's operator) runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import expr as _expr
from .bundle_ops import FirstOrderOperator, MatrixField
from .geometry import Chart1p1, DiagonalMetric, MetricPositivityError
from .grids import Grid1p1, CauchyData, MarginError, build_grid, check_causal_margin, make_cauchy_data

PRESETS = ("dirac_massive", "dirac_massless", "scalar_transport_pair", "klein_gordon_factorized")


class ConfigError(ValueError):
    """Configuration parse or validation failure."""


# ---------------------------------------------------------------------------
# low-level parsing

def _split_top_level(body: str, line_no: int) -> List[str]:
    parts = []
    depth = 0
    cur = []
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"line {line_no}: unbalanced ']'")
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    last = "".join(cur).strip()
    if last or parts:
        parts.append(last)
    if depth != 0:
        raise ConfigError(f"line {line_no}: unbalanced '['")
    return parts


def _parse_value(raw: str, line_no: int):
    raw = raw.strip()
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError(f"line {line_no}: list value must end with ']'")
        return [_parse_value(p, line_no) for p in _split_top_level(raw[1:-1], line_no)]
    try:
        v = float(raw)
        return int(v) if v == int(v) and "." not in raw and "e" not in raw.lower() else v
    except ValueError:
        return raw


def parse_config_text(text: str) -> Dict[str, Dict[str, object]]:
    """Parse the sectioned text into {section: {key: value}}."""
    sections: Dict[str, Dict[str, object]] = {}
    current: Optional[str] = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]") and "=" not in stripped:
            current = stripped[1:-1].strip()
            if not current:
                raise ConfigError(f"line {line_no}: empty section name")
            sections.setdefault(current, {})
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"line {line_no}: key outside any [section]")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        sections[current][key] = _parse_value(raw, line_no)
    return sections


# ---------------------------------------------------------------------------
# scenario structure

@dataclass
class WindowSpec:
    center: float
    halfwidth: float
    steepness: float


@dataclass
class SourceSpec:
    components: List[str]
    x_window: WindowSpec
    t_window: WindowSpec


@dataclass
class ScenarioConfig:
    alpha: str
    beta: str
    t_range: Tuple[float, float]
    x_range: Tuple[float, float]
    topology: str
    rank: int
    preset: Optional[str]
    mass: float
    p_coeffs: Optional[Dict[str, List[List[str]]]]  # A_t, A_x, B
    q_coeffs: Optional[Dict[str, List[List[str]]]]
    nx: int
    cfl: float
    t0: float
    initial_components: List[str]
    window: WindowSpec
    source: Optional[SourceSpec]
    dual_source: Optional[SourceSpec]
    output_directory: str
    output_formats: List[str]

    # -- resolution into model objects -------------------------------------

    def chart(self) -> Chart1p1:
        return Chart1p1(self.t_range[0], self.t_range[1], self.x_range[0], self.x_range[1], self.topology)

    def metric(self) -> DiagonalMetric:
        try:
            return DiagonalMetric(self.alpha, self.beta, self.chart())
        except MetricPositivityError as e:
            raise ConfigError(str(e))

    def grid(self, metric: Optional[DiagonalMetric] = None, nx: Optional[int] = None) -> Grid1p1:
        return build_grid(self.chart(), metric or self.metric(), nx or self.nx, self.cfl)

    def operators(self) -> Tuple[FirstOrderOperator, FirstOrderOperator]:
        pc, qc = self.p_coeffs, self.q_coeffs
        p = FirstOrderOperator.build(
            MatrixField.from_exprs(pc["A_t"]), MatrixField.from_exprs(pc["A_x"]), MatrixField.from_exprs(pc["B"])
        )
        q = FirstOrderOperator.build(
            MatrixField.from_exprs(qc["A_t"]), MatrixField.from_exprs(qc["A_x"]), MatrixField.from_exprs(qc["B"])
        )
        return p, q

    def initial_data(self, grid: Grid1p1) -> CauchyData:
        return make_cauchy_data(
            grid, self.initial_components, self.t0,
            self.window.center, self.window.halfwidth, self.window.steepness,
        )

    def echo(self) -> Dict[str, object]:
        """The resolved configuration as plain JSON-compatible data."""
        return {
            "spacetime": {
                "alpha": self.alpha, "beta": self.beta,
                "t_range": list(self.t_range), "x_range": list(self.x_range),
                "topology": self.topology,
            },
            "bundle": {"rank": self.rank},
            "operator_P": self.p_coeffs,
            "operator_Q": self.q_coeffs,
            "preset": self.preset,
            "mass": self.mass,
            "grid": {"nx": self.nx, "cfl": self.cfl},
            "initial_data": {
                "components": self.initial_components,
                "t0": self.t0,
                "window": {
                    "center": self.window.center,
                    "halfwidth": self.window.halfwidth,
                    "steepness": self.window.steepness,
                },
            },
            "source": None if self.source is None else {
                "components": self.source.components,
                "x_window": vars(self.source.x_window),
                "t_window": vars(self.source.t_window),
            },
            "output": {"directory": self.output_directory, "formats": self.output_formats},
        }


# ---------------------------------------------------------------------------
# preset resolution

def _over(num: str, den: str) -> str:
    return f"({num})/({den})"


def resolve_preset(name: str, mass: float, alpha: str, beta: str):
    """Expand a preset name into explicit coefficient expression matrices
    for both operators of the pair, on the metric with lapse alpha and
    spatial scale beta.  Principal parts use the orthonormal coframe, so
    the symbol product is g(xi, xi) Id on any diagonal metric."""
    m = repr(float(mass))
    ia, ib = _over("1", alpha), _over("1", beta)
    nia, nib = _over("-1", alpha), _over("-1", beta)
    if name in ("dirac_massive", "dirac_massless"):
        a_t = [["0", ia], [ia, "0"]]
        a_x = [["0", nib], [ib, "0"]]
        # the mass enters as i*m*Id: gamma0 B must be anti-Hermitian for
        # the conserved current; coefficient entries here are complex
        # constants rather than expression strings
        im = 1j * float(mass)
        b_p = [[im, 0.0], [0.0, im]]
        b_q = [[-im, 0.0], [0.0, -im]]
        return {"A_t": a_t, "A_x": a_x, "B": b_p}, {"A_t": a_t, "A_x": a_x, "B": b_q}, 2
    if name == "scalar_transport_pair":
        return (
            {"A_t": [[ia]], "A_x": [[ib]], "B": [["0"]]},
            {"A_t": [[ia]], "A_x": [[nib]], "B": [["0"]]},
            1,
        )
    if name == "klein_gordon_factorized":
        # two transport modes with off-diagonal mass coupling; the product
        # is the Klein-Gordon operator box + m^2 on each component
        a_t = [[ia, "0"], ["0", ia]]
        return (
            {"A_t": a_t, "A_x": [[ib, "0"], ["0", nib]], "B": [["0", m], [f"-{m}", "0"]]},
            {"A_t": a_t, "A_x": [[nib, "0"], ["0", ib]], "B": [["0", f"-{m}"], [m, "0"]]},
            2,
        )
    raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(PRESETS)}")


# ---------------------------------------------------------------------------
# loading and validation

def _require(sections, section: str, key: str):
    if section not in sections or key not in sections[section]:
        raise ConfigError(f"{section}.{key} required")
    return sections[section][key]


def _get(sections, section: str, key: str, default=None):
    return sections.get(section, {}).get(key, default)


def _as_pair(value, name: str) -> Tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{name} must be a two-element list")
    lo, hi = float(value[0]), float(value[1])
    if not lo < hi:
        raise ConfigError(f"{name} must be increasing")
    return (lo, hi)


def _check_expr(src: str, name: str) -> str:
    try:
        _expr.parse(str(src))
    except _expr.ExprSyntaxError as e:
        raise ConfigError(f"{name}: {e}")
    return str(src)


def _coeff_matrix(value, rank: int, name: str) -> List[List[str]]:
    if not isinstance(value, list) or len(value) != rank:
        raise ConfigError(f"{name} must be a {rank}x{rank} matrix of expressions")
    out = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != rank:
            raise ConfigError(f"{name} must be a {rank}x{rank} matrix of expressions")
        out.append([_check_expr(e, f"{name}[{i}][{j}]") for j, e in enumerate(row)])
    return out


def _window(sections, section: str, prefix: str = "window") -> WindowSpec:
    center = float(_require(sections, section, f"{prefix}_center"))
    halfwidth = float(_require(sections, section, f"{prefix}_halfwidth"))
    steepness = float(_require(sections, section, f"{prefix}_steepness"))
    if halfwidth <= 0 or steepness <= 0:
        raise ConfigError(f"{section}.{prefix}: halfwidth and steepness must be positive")
    return WindowSpec(center, halfwidth, steepness)


def _source_spec(sections, section: str, rank: int) -> Optional[SourceSpec]:
    if section not in sections:
        return None
    comps = _require(sections, section, "components")
    if not isinstance(comps, list) or len(comps) != rank:
        raise ConfigError(f"{section}.components must list {rank} expressions")
    comps = [_check_expr(c, f"{section}.components[{i}]") for i, c in enumerate(comps)]
    return SourceSpec(comps, _window(sections, section, "window"), _window(sections, section, "t_window"))


def load_config_text(text: str) -> ScenarioConfig:
    sections = parse_config_text(text)

    alpha = _check_expr(_require(sections, "spacetime", "alpha"), "spacetime.alpha")
    beta = _check_expr(_require(sections, "spacetime", "beta"), "spacetime.beta")
    t_range = _as_pair(_require(sections, "spacetime", "t_range"), "spacetime.t_range")
    x_range = _as_pair(_require(sections, "spacetime", "x_range"), "spacetime.x_range")
    topology = str(_get(sections, "spacetime", "topology", "line"))
    if topology not in ("line", "circle"):
        raise ConfigError("spacetime.topology must be 'line' or 'circle'")

    preset = _get(sections, "operator_P", "preset") or _get(sections, "operator_Q", "preset")
    pq = _get(sections, "operator_Q", "preset")
    if preset is not None and pq is not None and preset != pq:
        raise ConfigError("operator_P.preset and operator_Q.preset disagree")
    mass = float(_get(sections, "operator_P", "mass", _get(sections, "operator_Q", "mass", 1.0)))

    explicit_keys = [
        k for sec in ("operator_P", "operator_Q")
        for k in ("A_t", "A_x", "B") if _get(sections, sec, k) is not None
    ]
    if preset is not None and explicit_keys:
        raise ConfigError("presets and explicit coefficients are mutually exclusive")

    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known presets: {', '.join(PRESETS)}")
        if preset == "dirac_massless":
            mass = 0.0
        p_coeffs, q_coeffs, rank = resolve_preset(preset, mass, alpha, beta)
    else:
        rank = _require(sections, "bundle", "rank")
        if not isinstance(rank, int) or rank < 1:
            raise ConfigError("bundle.rank must be a positive integer")
        p_coeffs = {k: _coeff_matrix(_require(sections, "operator_P", k), rank, f"operator_P.{k}") for k in ("A_t", "A_x", "B")}
        q_coeffs = {k: _coeff_matrix(_require(sections, "operator_Q", k), rank, f"operator_Q.{k}") for k in ("A_t", "A_x", "B")}
    declared_rank = _get(sections, "bundle", "rank")
    if declared_rank is not None and declared_rank != rank:
        raise ConfigError(f"bundle.rank = {declared_rank} does not match operator rank {rank}")

    nx = _get(sections, "grid", "nx", 512)
    if not isinstance(nx, int) or nx < 8:
        raise ConfigError("grid.nx must be an integer >= 8")
    cfl = float(_get(sections, "grid", "cfl", 0.4))
    if not 0 < cfl <= 1:
        raise ConfigError("grid.cfl must be in (0, 1]")

    comps = _require(sections, "initial_data", "components")
    if not isinstance(comps, list) or len(comps) != rank:
        raise ConfigError(f"initial_data.components must list {rank} expressions")
    comps = [_check_expr(c, f"initial_data.components[{i}]") for i, c in enumerate(comps)]
    window = _window(sections, "initial_data")
    t0 = float(_get(sections, "initial_data", "t0", 0.5 * (t_range[0] + t_range[1])))
    if not t_range[0] < t0 < t_range[1]:
        raise ConfigError("initial_data.t0 must lie strictly inside t_range")

    source = _source_spec(sections, "source", rank)
    dual_source = _source_spec(sections, "dual_source", rank)

    out_dir = str(_get(sections, "output", "directory", "out"))
    formats = _get(sections, "output", "formats", ["json"])
    if isinstance(formats, str):
        formats = [formats]
    for f in formats:
        if f not in ("json", "csv"):
            raise ConfigError(f"output.formats: unknown format {f!r}")

    cfg = ScenarioConfig(
        alpha, beta, t_range, x_range, topology, rank, preset, mass,
        p_coeffs, q_coeffs, nx, cfl, t0, comps, window, source, dual_source,
        out_dir, formats,
    )
    _validate_geometry(cfg)
    return cfg


def _validate_geometry(cfg: ScenarioConfig) -> None:
    metric = cfg.metric()
    grid = cfg.grid(metric)
    from .grids import window_support
    support = window_support(cfg.window.center, cfg.window.halfwidth, cfg.window.steepness)
    if cfg.topology == "line":
        if support[0] <= cfg.x_range[0] or support[1] >= cfg.x_range[1]:
            raise ConfigError("initial_data.window: causal margin violated (window touches the boundary)")
        try:
            check_causal_margin(metric, grid, support, cfg.t0)
        except MarginError:
            raise ConfigError("initial_data.window: causal margin violated")


def load_config(path: str) -> ScenarioConfig:
    """Read and validate a scenario file; raises ConfigError on any
    parse or validation failure."""
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return load_config_text(text)
