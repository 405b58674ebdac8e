"""Command-line experiment runner.

Every subcommand writes a CSV table (stdout by default, or --output
FILE) and a short plain-text summary with estimated orders (stderr when
the CSV goes to stdout, stdout otherwise, so the two never interleave).
Floats are printed with 17 significant digits, which makes reruns of
the same configuration byte-identical; summaries repeat the headline
errors in compact mantissa-exponent form (2.36-6) for quick eyeballing.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure
(singular matrix, rank defect, eigensolver breakdown, bad coefficient),
4 threshold violation under --check.

A configuration file of `key = value` lines (# comments allowed) can
drive any subcommand via --config; explicit flags win over file values.
Set CPDE_THREADS to fan independent grid runs out over threads.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .analysis import (
    Classic,
    Compact,
    asymmetry_study,
    convergence_study,
    cut_study,
    diagonalization_check,
    efficiency_curve,
    first_integral_drift,
    first_integral_series,
    richardson_study,
    spectrum_report,
    transition_matrix,
)
from .core import ScalarKind, grid_for, sample_solution
from .interior import CUT_FULL, assemble_row, derive_row_oracle, FIELD_NAMES
from .linalg import EigenConvergenceError, RankError, SingularMatrixError
from .neumann import ClassicNeumann, CompactThreePoint, MainTerms, ReducedTwoPoint
from .steppers import ClassicRhsVariant, assemble_compact
from .theta_fit import CoefficientDomainError, fit_interior


class ConfigError(ValueError):
    pass


class CheckFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration file


_CONFIG_FIELDS = (
    ("experiment", "experiment"),
    ("solution", "solution"),
    ("params", "params"),
    ("scheme", "scheme"),
    ("ns", "ns"),
    ("courant", "courant"),
    ("t-final", "t_final"),
    ("output", "output"),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Raw string settings; conversion happens at point of use."""

    experiment: Optional[str] = None
    solution: Optional[str] = None
    params: Optional[str] = None
    scheme: Optional[str] = None
    ns: Optional[str] = None
    courant: Optional[str] = None
    t_final: Optional[str] = None
    output: Optional[str] = None
    extras: tuple = ()

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        for file_key, attr in _CONFIG_FIELDS:
            if key == file_key:
                val = getattr(self, attr)
                return default if val is None else val
        for k, v in self.extras:
            if k == key:
                return v
        return default


def parse_config(text: str) -> ExperimentConfig:
    known = dict(_CONFIG_FIELDS)
    fields = {}
    extras = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in known:
            fields[known[key]] = value
        else:
            extras.append((key, value))
    return ExperimentConfig(**fields, extras=tuple(extras))


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for file_key, attr in _CONFIG_FIELDS:
        value = getattr(cfg, attr)
        if value is not None:
            lines.append(f"{file_key} = {value}")
    for key, value in cfg.extras:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# literal parsers


def parse_courant(text) -> complex:
    """Scalar Courant literal; an i suffix marks an imaginary value."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().lower()
    try:
        if s.endswith("i"):
            body = s[:-1]
            if body in ("", "+", "-"):
                body += "1"
            return complex(0.0, float(body))
        return complex(float(s), 0.0)
    except ValueError as exc:
        raise ConfigError(f"bad courant literal {text!r}") from exc


def format_courant(value: complex) -> str:
    if value.imag == 0.0:
        return "%.17g" % value.real
    return "%.17gi" % value.imag


def parse_ns(text: str) -> list:
    try:
        return [int(tok) for tok in str(text).replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"bad grid-size list {text!r}") from exc


def parse_params(text: Optional[str]) -> dict:
    """Sample parameters as `k:3,a:2.0` (colon pairs, comma separated)."""
    if not text:
        return {}
    out = {}
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" not in tok:
            raise ConfigError(f"bad parameter token {tok!r} (want name:value)")
        name, value = tok.split(":", 1)
        name = name.strip()
        value = value.strip()
        try:
            num = int(value)
        except ValueError:
            try:
                num = float(value)
            except ValueError as exc:
                raise ConfigError(f"bad parameter value {value!r}") from exc
        out[name] = num
    return out


def parse_cut(token: str) -> int:
    tok = str(token).strip()
    if tok == "9+":
        return CUT_FULL
    try:
        return int(tok)
    except ValueError as exc:
        raise ConfigError(f"bad cut level {token!r}") from exc


_NEUMANN_TOKENS = {
    "3pt": CompactThreePoint,
    "compact": CompactThreePoint,
    "reduced": ReducedTwoPoint,
    "2pt": ReducedTwoPoint,
    "main": MainTerms,
}

_CLASSIC_RHS = {
    "pointwise": ClassicRhsVariant.POINTWISE,
    "threepoint": ClassicRhsVariant.THREE_POINT,
    "fivepoint": ClassicRhsVariant.FIVE_POINT,
}


def parse_scheme(text: Optional[str]):
    """Scheme literal: `compact[:cut=7][,neumann=reduced]` or
    `classic:pointwise[,eps=0.5]` (also threepoint / fivepoint)."""
    s = (text or "compact").strip().lower()
    head, _, opt_str = s.partition(":")
    tokens = [t.strip() for t in opt_str.split(",") if t.strip()]
    options = {}
    flags = []
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            options[k.strip()] = v.strip()
        else:
            flags.append(tok)
    if head == "compact":
        if flags:
            raise ConfigError(f"unknown compact option {flags[0]!r}")
        cut = parse_cut(options.pop("cut", "9+"))
        neumann_name = options.pop("neumann", "3pt")
        if neumann_name == "classic":
            variant = ClassicNeumann(float(options.pop("eps", "0.5")))
        elif neumann_name in _NEUMANN_TOKENS:
            variant = _NEUMANN_TOKENS[neumann_name]()
        else:
            raise ConfigError(f"unknown neumann variant {neumann_name!r}")
        if options:
            raise ConfigError(f"unknown compact option {sorted(options)[0]!r}")
        return Compact(cut=cut, neumann=variant)
    if head == "classic":
        rhs_name = flags[0] if flags else options.pop("rhs", "pointwise")
        if len(flags) > 1:
            raise ConfigError(f"unknown classic option {flags[1]!r}")
        if rhs_name not in _CLASSIC_RHS:
            raise ConfigError(f"unknown classic right-hand side {rhs_name!r}")
        eps = float(options.pop("eps", "0.5"))
        if options:
            raise ConfigError(f"unknown classic option {sorted(options)[0]!r}")
        return Classic(rhs=_CLASSIC_RHS[rhs_name], neumann=ClassicNeumann(eps))
    raise ConfigError(f"unknown scheme {text!r}")


def scheme_label(scheme) -> str:
    if isinstance(scheme, Compact):
        bits = ["compact"]
        opts = []
        if scheme.cut != CUT_FULL:
            opts.append(f"cut={scheme.cut}")
        if not isinstance(scheme.neumann, CompactThreePoint):
            if isinstance(scheme.neumann, ReducedTwoPoint):
                opts.append("neumann=reduced")
            elif isinstance(scheme.neumann, MainTerms):
                opts.append("neumann=main")
            else:
                opts.append(f"neumann=classic,eps={scheme.neumann.epsilon:g}")
        return bits[0] + (":" + ",".join(opts) if opts else "")
    rhs = scheme.rhs.value
    eps = scheme.neumann.epsilon if isinstance(scheme.neumann, ClassicNeumann) else 0.5
    tail = f",eps={eps:g}" if eps != 0.5 else ""
    return f"classic:{rhs}{tail}"


# ---------------------------------------------------------------------------
# formatting


def g17(value: float) -> str:
    return "%.17g" % float(value)


def mantissa_style(value: float) -> str:
    """Compact mantissa-exponent form: 2.36e-06 prints as 2.36-6."""
    if value == 0.0 or not math.isfinite(value):
        return "%g" % value
    e = math.floor(math.log10(abs(value)))
    m = value / 10.0 ** e
    text = f"{m:.2f}"
    if abs(float(text)) >= 10.0:  # rounding pushed the mantissa over
        m /= 10.0
        e += 1
        text = f"{m:.2f}"
    return f"{text}{e:+d}"


def make_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    def fmt(v):
        if isinstance(v, bool):
            return "1" if v else "0"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return g17(v)
        return str(v)

    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _band(label: str, value: float, lo: float, hi: float, failures: list):
    if not (lo <= value <= hi):
        failures.append(f"{label} = {value:.4g} outside [{lo:.4g}, {hi:.4g}]")


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="key = value settings file")
    p.add_argument("--output", default=None, help="CSV destination (default stdout)")
    p.add_argument("--check", action="store_true", help="fail (exit 4) on threshold violations")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpde", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="C-norm error versus grid size")
    _add_common(p)
    p.add_argument("--solution", default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--scheme", default=None)
    p.add_argument("--ns", default=None)
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None)

    p = sub.add_parser("richardson", help="extrapolated error versus grid size")
    _add_common(p)
    p.add_argument("--solution", default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--scheme", default=None)
    p.add_argument("--ns", default=None)
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None)

    p = sub.add_parser("cut", help="convergence under coefficient truncation")
    _add_common(p)
    p.add_argument("--solution", default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--ns", default=None)
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None)
    p.add_argument("--cuts", default=None, help="comma list from 4..9 and 9+")

    p = sub.add_parser("asymmetry", help="transition/forcing asymmetry decay")
    _add_common(p)
    p.add_argument("--ns", default=None)
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None,
                   help="optional horizon; omit for the raw one-step tau")

    p = sub.add_parser("spectrum", help="transition-matrix eigenvalues")
    _add_common(p)
    p.add_argument("--solution", default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--n", default=None)
    p.add_argument("--courant", default=None)

    p = sub.add_parser("first-integral", help="discrete first-integral history/drift")
    _add_common(p)
    p.add_argument("--n", default=None, help="single run: per-step history")
    p.add_argument("--ns", default=None, help="several runs: drift amplitudes")
    p.add_argument("--quadrature", default=None, help="trapezoid (default) or simpson")
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None)

    p = sub.add_parser("efficiency", help="error against per-step cost for both schemes")
    _add_common(p)
    p.add_argument("--solution", default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--ns", default=None)
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None)
    p.add_argument("--classic-rhs", dest="classic_rhs", default=None,
                   help="pointwise (default), threepoint, or fivepoint")

    p = sub.add_parser("derive-row", help="dump assembled vs derived row at one node")
    _add_common(p)
    p.add_argument("--solution", default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--n", default=None)
    p.add_argument("--node", default=None)
    p.add_argument("--courant", default=None)
    p.add_argument("--t-final", dest="t_final", default=None)

    return ap


class _Settings:
    """Merged view of command-line flags over config-file values."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        if getattr(args, "config", None):
            with open(args.config, "r", encoding="utf-8") as fh:
                self.config = parse_config(fh.read())
        else:
            self.config = ExperimentConfig()

    def get(self, key: str, default=None):
        attr = key.replace("-", "_")
        cli_val = getattr(self.args, attr, None)
        if cli_val is not None:
            return cli_val
        return self.config.get(key, default)

    def require(self, key: str):
        val = self.get(key)
        if val is None:
            raise ConfigError(f"missing required setting {key!r}")
        return val


_ALIASES = {"neumann-demo": "snll"}


def _solution_id(settings: _Settings, default: Optional[str] = "s1") -> str:
    name = str(settings.get("solution", default)).strip().lower()
    return _ALIASES.get(name, name)


def _emit(csv_text: str, summary_lines: list, output: Optional[str]):
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
        stream = sys.stdout
    else:
        sys.stdout.write(csv_text)
        stream = sys.stderr
    for line in summary_lines:
        print(line, file=stream)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_convergence(settings: _Settings) -> list:
    solution = _solution_id(settings)
    params = parse_params(settings.get("params"))
    scheme = parse_scheme(settings.get("scheme"))
    ns = parse_ns(settings.require("ns"))
    courant = parse_courant(settings.get("courant", "1"))
    t_final = float(settings.get("t-final", "1"))
    rep = convergence_study(solution, params, scheme, ns, courant, t_final)
    rows = [
        (e.n, e.h, e.tau, e.steps, e.error, e.muls_per_step) for e in rep.entries
    ]
    csv_text = make_csv(["N", "h", "tau", "steps", "error_cnorm", "muls_per_step"], rows)
    summary = [f"convergence: {solution} {scheme_label(scheme)} courant={format_courant(courant)}"]
    for e in rep.entries:
        summary.append(
            f"  N={e.n:<4d} error={g17(e.error)} ({mantissa_style(e.error)}) muls/step={e.muls_per_step}"
        )
    summary.append(
        f"  estimated order = {rep.estimated_order:.2f} (least squares {rep.lsq_order:.2f})"
    )
    failures = []
    if settings.args.check:
        if isinstance(scheme, Compact) and scheme.cut == CUT_FULL:
            _band("compact order", rep.estimated_order, 3.5, 4.5, failures)
        elif isinstance(scheme, Classic):
            _band("classic order", rep.estimated_order, 1.8, 2.2, failures)
        else:
            _band("truncated compact order", rep.estimated_order, 3.5, 4.5, failures)
        if (
            solution == "s1"
            and isinstance(scheme, Compact)
            and scheme.cut == CUT_FULL
            and courant == 1.0
            and tuple(sorted(ns)) == (10, 20, 50, 100)
        ):
            _band("order (reference row)", rep.estimated_order, 3.83 - 0.15, 3.83 + 0.15, failures)
            for e, ref in zip(rep.entries, (1.58e-2, 1.36e-3, 3.73e-5, 2.36e-6)):
                if not (ref / 2.0 <= e.error <= ref * 2.0):
                    failures.append(
                        f"N={e.n} error {e.error:.3e} outside factor 2 of {ref:.3e}"
                    )
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_richardson(settings: _Settings) -> list:
    solution = _solution_id(settings)
    params = parse_params(settings.get("params"))
    scheme = parse_scheme(settings.get("scheme"))
    ns = parse_ns(settings.require("ns"))
    courant = parse_courant(settings.get("courant", "1"))
    t_final = float(settings.get("t-final", "1"))
    rep = richardson_study(solution, params, scheme, ns, courant, t_final)
    rows = [(e.n, e.h, e.error_h, e.error_extrapolated) for e in rep.entries]
    csv_text = make_csv(["N", "h", "error_h", "error_extrapolated"], rows)
    summary = [f"richardson: {solution} {scheme_label(scheme)}"]
    for e in rep.entries:
        summary.append(
            f"  N={e.n:<4d} error={mantissa_style(e.error_h)} extrapolated={mantissa_style(e.error_extrapolated)}"
        )
    summary.append(
        f"  orders: plain = {rep.order_h:.2f}, extrapolated = {rep.order_extrapolated:.2f}"
    )
    failures = []
    if settings.args.check:
        if isinstance(scheme, Classic):
            _band("extrapolated classic order", rep.order_extrapolated, 3.8, 4.2, failures)
        else:
            _band("extrapolated compact order", rep.order_extrapolated, 5.7, 6.3, failures)
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_cut(settings: _Settings) -> list:
    solution = _solution_id(settings)
    params = parse_params(settings.get("params"))
    ns = parse_ns(settings.require("ns"))
    courant = parse_courant(settings.get("courant", "1"))
    t_final = float(settings.get("t-final", "1"))
    tokens = [t.strip() for t in str(settings.get("cuts", "5,6,7,8,9,9+")).split(",") if t.strip()]
    cuts = [parse_cut(t) for t in tokens]
    reports = cut_study(solution, params, ns, courant, t_final, cuts)
    rows = []
    for token, cut in zip(tokens, cuts):
        rep = reports[cut]
        for e in rep.entries:
            rows.append((token, e.n, e.h, e.tau, e.steps, e.error, e.muls_per_step))
    csv_text = make_csv(["cut", "N", "h", "tau", "steps", "error_cnorm", "muls_per_step"], rows)
    summary = [f"cut study: {solution}"]
    failures = []
    for token, cut in zip(tokens, cuts):
        rep = reports[cut]
        errs = " ".join(mantissa_style(e.error) for e in rep.entries)
        summary.append(f"  cut={token:<3} order={rep.estimated_order:.2f} errors: {errs}")
        if settings.args.check and cut >= 5:
            if rep.estimated_order < 3.9:
                failures.append(f"cut={token} order {rep.estimated_order:.2f} < 3.9")
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_asymmetry(settings: _Settings) -> list:
    ns = parse_ns(settings.require("ns"))
    courant = parse_courant(settings.get("courant", "1"))
    t_raw = settings.get("t-final")
    t_final = float(t_raw) if t_raw is not None else None
    rep = asymmetry_study(ns, courant, t_final=t_final)
    rows = [(e.n, e.h, e.tau, e.s_transition, e.s_forcing) for e in rep.entries]
    csv_text = make_csv(["N", "h", "tau", "s_transition", "s_forcing"], rows)
    summary = ["asymmetry decay (Dirichlet interior, compact scheme)"]
    for e in rep.entries:
        summary.append(
            f"  N={e.n:<4d} S_transition={mantissa_style(e.s_transition)} S_forcing={mantissa_style(e.s_forcing)}"
        )
    summary.append(
        f"  orders: transition = {rep.order_transition:.2f}, forcing = {rep.order_forcing:.2f}"
    )
    failures = []
    if settings.args.check:
        _band("transition asymmetry order", rep.order_transition, 3.62 - 0.4, 3.62 + 0.4, failures)
        _band("forcing asymmetry order", rep.order_forcing, 5.62 - 0.5, 5.62 + 0.5, failures)
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_spectrum(settings: _Settings) -> list:
    solution = _solution_id(settings, default="neumann-demo")
    params = parse_params(settings.get("params"))
    n = int(settings.require("n"))
    courant = parse_courant(settings.get("courant", "1"))
    kind = ScalarKind.COMPLEX if courant.imag != 0.0 else None
    sample = sample_solution(solution, kind=kind, **params)
    grid = analysis._matrix_grid(n, courant, sample.problem.theta)
    mats = assemble_compact(sample.problem, grid)
    m = transition_matrix(mats)
    rep = spectrum_report(m)
    rows = [
        (k, v.real, v.imag, abs(v)) for k, v in enumerate(rep.eigenvalues)
    ]
    csv_text = make_csv(["index", "re", "im", "modulus"], rows)
    is_ll = sample.problem.kind is ScalarKind.COMPLEX
    summary = [
        f"spectrum: {solution} N={n} courant={format_courant(courant)} size={len(rep.eigenvalues)}",
        f"  max |lambda| = {g17(rep.max_modulus)}",
        f"  max |Im lambda| = {g17(rep.max_imag_abs)}",
        f"  negativity criterion (A_new^-1 A_old): {'yes' if rep.all_negative else 'no'}",
        f"  diagonalization: {diagonalization_check(m)}",
    ]
    failures = []
    if settings.args.check:
        if is_ll:
            dev = float(np.abs(np.abs(rep.eigenvalues) - 1.0).max())
            if dev > 1e-8:
                failures.append(f"max ||lambda|-1| = {dev:.3e} > 1e-8")
        else:
            if rep.max_modulus >= 1.0:
                failures.append(f"max |lambda| = {rep.max_modulus:.6f} >= 1")
            if rep.max_imag_abs > 1e-8 * max(rep.max_modulus, 1e-300):
                failures.append(f"max |Im lambda| = {rep.max_imag_abs:.3e} not negligible")
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_first_integral(settings: _Settings) -> list:
    quadrature = settings.get("quadrature", "trapezoid")
    courant = parse_courant(settings.get("courant", "i"))
    t_final = float(settings.get("t-final", "1"))
    ns_raw = settings.get("ns")
    failures = []
    if ns_raw is not None:
        ns = parse_ns(ns_raw)
        rep = first_integral_drift(ns, courant, t_final, quadrature)
        rows = [(e.n, e.h, e.baseline, e.amplitude) for e in rep.entries]
        csv_text = make_csv(["N", "h", "integral_t0", "amplitude"], rows)
        summary = [f"first-integral drift ({quadrature})"]
        for e in rep.entries:
            summary.append(f"  N={e.n:<4d} amplitude={mantissa_style(e.amplitude)}")
        summary.append(f"  amplitude slope = {rep.slope:.2f}")
        if settings.args.check:
            _band("amplitude slope", rep.slope, 2.5, 3.5, failures)
    else:
        n = int(settings.require("n"))
        series = first_integral_series(n, courant, t_final, quadrature)
        rows = [(k, t, val) for k, t, val in series]
        csv_text = make_csv(["step", "t", "integral"], rows)
        vals = [v for _, _, v in series]
        spread = max(vals) - min(vals)
        summary = [
            f"first-integral history ({quadrature}) N={n} steps={len(series) - 1}",
            f"  I(0) = {g17(vals[0])}",
            f"  spread = {g17(spread)} ({mantissa_style(spread) if spread else '0'})",
        ]
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_efficiency(settings: _Settings) -> list:
    solution = _solution_id(settings)
    params = parse_params(settings.get("params"))
    ns = parse_ns(settings.require("ns"))
    courant = parse_courant(settings.get("courant", "1"))
    t_final = float(settings.get("t-final", "1"))
    rhs_name = settings.get("classic-rhs", "pointwise")
    schemes = [
        ("compact", Compact()),
        (f"classic:{rhs_name}", Classic(rhs=_CLASSIC_RHS[rhs_name])),
    ]
    results = efficiency_curve(solution, params, schemes, ns, courant, t_final)
    rows = []
    for label, rep in results:
        for e in rep.entries:
            rows.append((label, e.n, e.h, e.muls_per_step, e.error))
    csv_text = make_csv(["scheme", "N", "h", "muls_per_step", "error_cnorm"], rows)
    summary = [f"efficiency: {solution}"]
    for label, rep in results:
        pts = " ".join(
            f"({e.muls_per_step}, {mantissa_style(e.error)})" for e in rep.entries
        )
        summary.append(f"  {label}: {pts}")
    failures = []
    if settings.args.check:
        compact_rep = dict(results)["compact"]
        classic_rep = dict(results)[f"classic:{rhs_name}"]
        for ce in compact_rep.entries:
            if ce.n < 20:
                continue
            budget = ce.muls_per_step
            rivals = [e.error for e in classic_rep.entries if e.muls_per_step <= budget]
            if rivals and min(rivals) <= ce.error:
                failures.append(
                    f"compact N={ce.n} error {ce.error:.3e} not below classic "
                    f"{min(rivals):.3e} at budget {budget}"
                )
    _emit(csv_text, summary, settings.get("output"))
    return failures


def _cmd_derive_row(settings: _Settings) -> list:
    solution = _solution_id(settings)
    params = parse_params(settings.get("params"))
    n = int(settings.require("n"))
    courant = parse_courant(settings.get("courant", "1"))
    t_final = float(settings.get("t-final", "1"))
    kind = ScalarKind.COMPLEX if courant.imag != 0.0 else None
    sample = sample_solution(solution, kind=kind, **params)
    grid = grid_for(sample, n, courant, t_final)
    node = int(settings.get("node", str(max(1, n // 2))))
    if not (1 <= node <= n - 1):
        raise ConfigError(f"node must be an interior index in 1..{n - 1}, got {node}")
    x_j = float(grid.x[node])
    fit = fit_interior(sample.problem.theta, x_j, grid.h)
    kappa = sample.problem.kind.kappa
    nu = kappa * fit.theta_center * grid.tau / (grid.h * grid.h)
    row = assemble_row(fit, nu, grid.h)
    assembled = row.as_array()
    oracle = derive_row_oracle(fit, nu, grid.h, grid.tau).as_array()
    scale = complex(np.vdot(assembled, oracle) / np.vdot(assembled, assembled))
    residual = float(np.abs(oracle - scale * assembled).max() / np.abs(oracle).max())
    rows = [
        (name, a.real, a.imag, o.real, o.imag)
        for name, a, o in zip(FIELD_NAMES, assembled, oracle)
    ]
    csv_text = make_csv(
        ["coefficient", "assembled_re", "assembled_im", "derived_re", "derived_im"], rows
    )
    summary = [
        f"derive-row: {solution} N={n} node={node} x={g17(x_j)}",
        f"  proportionality factor = {g17(scale.real)} + {g17(scale.imag)}j",
        f"  max relative deviation = {mantissa_style(residual)}",
    ]
    failures = []
    if settings.args.check and residual > 1e-8:
        failures.append(f"row deviation {residual:.3e} > 1e-8")
    _emit(csv_text, summary, settings.get("output"))
    return failures


_COMMANDS = {
    "convergence": _cmd_convergence,
    "richardson": _cmd_richardson,
    "cut": _cmd_cut,
    "asymmetry": _cmd_asymmetry,
    "spectrum": _cmd_spectrum,
    "first-integral": _cmd_first_integral,
    "efficiency": _cmd_efficiency,
    "derive-row": _cmd_derive_row,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage problems itself
        return int(exc.code or 0)
    try:
        settings = _Settings(args)
        failures = _COMMANDS[args.command](settings)
        if failures:
            for msg in failures:
                print(f"CHECK FAILED: {msg}", file=sys.stderr)
            return 4
        return 0
    except (SingularMatrixError, RankError, EigenConvergenceError,
            CoefficientDomainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
