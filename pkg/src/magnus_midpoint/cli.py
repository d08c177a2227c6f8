"""Batch experiment runner.

    magnus-midpoint run experiment.json [--out-dir DIR]
    magnus-midpoint list-families
    magnus-midpoint version

Exit codes: 0 success (including failed scientific checks, which are
recorded as flags in the JSON summary), 1 invalid configuration,
2 numerical failure, 3 I/O failure.
"""
import argparse
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, _accel, analysis, operators, profiles
from .errors import NumericalFailure, UsageError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
ANALYSES = ("global_order", "local_order", "stability", "voc", "bound_check")
SCHEMES = ("midpoint", "magnus4")
STABILITY_TOL = 1e-10

FAMILIES = {
    "constant": ("dim, seed", "constant seeded skew-Hermitian generator; every scheme is exact"),
    "affine_phase": ("(none)", "scalar i(1 + t); the midpoint rule integrates it exactly"),
    "weierstrass": ("dim, alpha, seed", "A0 + w_alpha(t) B with a lacunary cosine series, alpha-Hölder at every scale"),
    "abs_sine": ("dim, seed, freq", "A0 + |sin(freq t)| B, Lipschitz with kinks"),
    "smooth": ("dim, seed, freq, phase", "A0 + cos(freq t + phase) B, smooth and non-commuting"),
    "schrodinger_1d": ("n_modes, potential", "periodic Schrödinger operator in Fourier modes, potential b(x, t)"),
    "divergence_form_1d": ("n_grid, coefficient", "i d/dx a(x, t) d/dx by finite differences, a >= c_min"),
}


class ConfigError(UsageError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for numerical failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# spec parsing
# ---------------------------------------------------------------------------


def _get(obj, key, path, kind, default=...):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    value = obj[key]
    where = f"{path}.{key}"
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where}: expected a finite number, got {value!r}")
        value = float(value)
    elif kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
    elif kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
    elif kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
    return value


def _choice(obj, key, path, options, default=...):
    value = _get(obj, key, path, str, default)
    if value not in options:
        raise ConfigError(f"{path}.{key}: expected one of {list(options)}, got {value!r}")
    return value


def _sorted_list(spec, key, kind, increasing=True):
    values = _get(spec, key, "spec", list)
    if not isinstance(values, list) or not values:
        raise ConfigError(f"spec.{key}: expected a non-empty list")
    for i, v in enumerate(values):
        bad = isinstance(v, bool) or not isinstance(v, (int, float) if kind is float else int)
        if bad or not math.isfinite(v):
            raise ConfigError(f"spec.{key}[{i}]: expected {'a number' if kind is float else 'an integer'}, got {v!r}")
    values = [kind(v) for v in values]
    pairs = list(zip(values, values[1:]))
    ok = all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)
    if not ok:
        raise ConfigError(f"spec.{key}: must be strictly {'increasing' if increasing else 'decreasing'}")
    return values


_SHAPES = {
    "cos": np.cos,
    "sin": np.sin,
    "one": np.ones_like,
}


def _profile(sel, path):
    kind = _choice(sel, "profile", path, ("weierstrass", "cos", "abs_sine"))
    if kind == "weierstrass":
        alpha = _get(sel, "alpha", path, float)
        if not 0.0 < alpha <= 1.0:
            raise ConfigError(f"{path}.alpha: must lie in (0, 1], got {alpha}")
        prof = profiles.weierstrass(alpha)
    elif kind == "cos":
        freq = _get(sel, "freq", path, float, 1.0)
        phase = _get(sel, "phase", path, float, 0.0)
        prof = profiles.TrigProfile([1.0], [abs(freq)], [phase], name="cos")
    else:
        prof = profiles.AbsSineProfile(_get(sel, "freq", path, float, 1.0), _get(sel, "phase", path, float, 0.0))
    if _get(sel, "normalize", path, bool, False):
        if not isinstance(prof, profiles.TrigProfile):
            raise ConfigError(f"{path}.normalize: only cosine-series profiles can be normalized")
        prof = prof.scaled(1.0 / prof.sup_abs())
    return prof


def _field(sel, path, default_offset):
    prof = _profile(sel, path)
    amplitude = _get(sel, "amplitude", path, float, 1.0)
    shape_fn = _SHAPES[_choice(sel, "shape", path, tuple(_SHAPES), "cos")]
    offset = _get(sel, "offset", path, float, default_offset)

    def shape(x):
        return amplitude * shape_fn(x)

    def const(x):
        return offset * np.ones_like(x)

    return operators.SeparableField(prof, shape, const if offset != 0.0 else None)


def _positive_int(sel, key, path, default=...):
    v = _get(sel, key, path, int, default)
    if v < 1:
        raise ConfigError(f"{path}.{key}: must be >= 1, got {v}")
    return v


def build_family(sel, path="spec.family"):
    label = _choice(sel, "label", path, tuple(FAMILIES))
    seed = _get(sel, "seed", path, int, 0)
    try:
        if label == "constant":
            return operators.family_constant_seeded(_positive_int(sel, "dim", path), seed)
        if label == "affine_phase":
            return operators.family_affine_phase()
        if label == "weierstrass":
            return operators.family_weierstrass(_positive_int(sel, "dim", path), _get(sel, "alpha", path, float), seed)
        if label == "abs_sine":
            return operators.family_abs_sine(_positive_int(sel, "dim", path), seed, _get(sel, "freq", path, float, 5.0))
        if label == "smooth":
            return operators.family_smooth(
                _positive_int(sel, "dim", path), seed,
                _get(sel, "freq", path, float, 3.0), _get(sel, "phase", path, float, 0.4),
            )
        if label == "schrodinger_1d":
            pot = _get(sel, "potential", path, dict)
            field = _field(pot, path + ".potential", 0.0)
            return operators.family_schrodinger_1d(
                _get(sel, "n_modes", path, int), field, alpha_decl=field.profile.alpha
            )
        coef = _get(sel, "coefficient", path, dict)
        field = _field(coef, path + ".coefficient", 1.0)
        return operators.family_divergence_form_1d(
            _get(sel, "n_grid", path, int), field, alpha_decl=field.profile.alpha,
            c_min=_get(sel, "c_min", path, float, 0.5),
        )
    except ConfigError:
        raise
    except UsageError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _smooth_gaussian(f):
    n = f.dim
    x = 2.0 * np.pi * np.arange(n) / n
    g = np.exp(-((x - np.pi) ** 2) / (2.0 * 0.4**2)).astype(np.complex128)
    if f.label == "schrodinger_1d":
        g = np.fft.fft(g) / math.sqrt(n)
    return g / np.linalg.norm(g)


def build_vector(sel, f, path="spec.initial_vector"):
    kind = _choice(sel, "kind", path, ("smooth_gaussian", "random", "basis"))
    if kind == "smooth_gaussian":
        return _smooth_gaussian(f)
    if kind == "random":
        rng = operators.seeded_generator(_get(sel, "seed", path, int))
        v = rng.standard_normal(f.dim) + 1j * rng.standard_normal(f.dim)
        return v / np.linalg.norm(v)
    k = _get(sel, "k", path, int)
    if not 0 <= k < f.dim:
        raise ConfigError(f"{path}.k: must lie in [0, {f.dim}), got {k}")
    v = np.zeros(f.dim, dtype=np.complex128)
    v[k] = 1.0
    return v


def build_perturbation(sel, f, path="spec.perturbation"):
    """``b(t) = amplitude cos(freq t) i H`` with a seeded unit Hermitian ``H``."""
    amplitude = _get(sel, "amplitude", path, float, 0.5)
    freq = _get(sel, "freq", path, float, 6.0)
    rng = operators.seeded_generator(_get(sel, "seed", path, int, 0))
    c = 1j * amplitude * operators.random_hermitian_unit(f.dim, rng)

    def b(t):
        return math.cos(freq * t) * c

    return b


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def _json_text(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _json_text(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _curve_rows(curve):
    lines = ["n,h,error,masked"]
    for n, h, e, m in zip(curve.ns, curve.hs, curve.errors, curve.masked):
        lines.append(f"{n},{_fmt(h)},{_fmt(e)},{'true' if m else 'false'}")
    return lines


def execute(spec):
    """Run a parsed spec; return ``(csv_text, summary_dict)``."""
    if not isinstance(spec, dict):
        raise ConfigError("spec: expected a JSON object at top level")
    fam = build_family(_get(spec, "family", "spec", dict))
    interval = _get(spec, "interval", "spec", dict, {"s": 0.0, "t": 1.0})
    s = _get(interval, "s", "spec.interval", float, 0.0)
    t = _get(interval, "t", "spec.interval", float, 1.0)
    if not s < t:
        raise ConfigError(f"spec.interval: need s < t, got s={s}, t={t}")
    scheme = _choice(spec, "scheme", "spec", SCHEMES, "midpoint")
    what = _choice(spec, "analysis", "spec", ANALYSES)
    seed = spec.get("family", {}).get("seed")
    summary = {
        "spec": spec,
        "artifact_version": __version__,
        "backend": _accel.backend(),
        "seed": seed,
        "family_label": fam.label,
        "analysis": what,
        "exact_scheme": fam.exact is not None,
        "fitted_order": None,
        "fitted_const": None,
        "bound_check": None,
        "stability_pass": None,
        "oracle_n": None,
    }
    if what in ("global_order", "bound_check"):
        ns = _sorted_list(spec, "ns", int)
        if ns[0] < 1:
            raise ConfigError("spec.ns: entries must be >= 1")
        norm = _choice(spec, "norm", "spec", analysis.NORM_KINDS, "operator")
        x = None
        if norm == "vector":
            x = build_vector(_get(spec, "initial_vector", "spec", dict), fam)
        if what == "bound_check":
            if norm != "operator":
                raise ConfigError("spec.norm: bound_check needs the operator norm")
            if scheme != "midpoint":
                raise ConfigError("spec.scheme: bound_check applies to the midpoint scheme")
            if fam.split is None or fam.regularity is None:
                raise ConfigError(f"spec.family: {fam.label!r} has no declared regularity for bound_check")
        curve = analysis.global_error_curve(fam, s, t, ns, norm, x=x, scheme=scheme)
        summary.update(fitted_order=curve.fitted_order, fitted_const=curve.fitted_const, oracle_n=curve.oracle_n,
                       all_masked=all(curve.masked))
        if what == "bound_check":
            rep = analysis.theorem_bound_check(fam, s, t, ns, curve=curve)
            summary["bound_check"] = {
                "passed": rep.passed,
                "worst_ratio": rep.worst_ratio,
                "K": rep.k_const,
                "M": rep.m_const,
                "omega": rep.omega,
                "L": rep.holder_const,
                "alpha": rep.alpha,
                "bounds": list(rep.bounds),
            }
        return "\n".join(_curve_rows(curve)) + "\n", summary
    if what == "local_order":
        hs = _sorted_list(spec, "hs", float, increasing=False)
        if hs[-1] <= 0:
            raise ConfigError("spec.hs: entries must be positive")
        curve = analysis.local_error_curve(fam, s, hs)
        summary.update(fitted_order=curve.fitted_order, fitted_const=curve.fitted_const, oracle_n=curve.oracle_n)
        return "\n".join(_curve_rows(curve)) + "\n", summary
    if what == "stability":
        n = _positive_int(spec, "n", "spec")
        omega = _get(spec, "omega", "spec", float, 0.0)
        rep = analysis.stability_probe(fam, s, t, n, omega, scheme=scheme)
        summary.update(max_growth=rep.max_growth, omega_used=rep.omega_used, n=rep.n,
                       stability_pass=rep.max_growth <= 1.0 + STABILITY_TOL)
        lines = ["k,partial_norm,discounted"]
        lines += [f"{k},{_fmt(a)},{_fmt(b)}" for k, (a, b) in enumerate(zip(rep.partial_norms, rep.discounted))]
        return "\n".join(lines) + "\n", summary
    nodes = _sorted_list(spec, "quad_nodes", int)
    if nodes[0] < 2:
        raise ConfigError("spec.quad_nodes: entries must be >= 2")
    b = build_perturbation(_get(spec, "perturbation", "spec", dict, {}), fam)
    residuals = [analysis.voc_residual(fam, b, s, t, q) for q in nodes]
    summary["residuals"] = residuals
    lines = ["quad_nodes,residual"] + [f"{q},{_fmt(r)}" for q, r in zip(nodes, residuals)]
    return "\n".join(lines) + "\n", summary


def _atomic_write(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _output_paths(spec, spec_path, out_dir):
    stem = os.path.splitext(os.path.basename(spec_path))[0]
    out = spec.get("output", {}) if isinstance(spec, dict) else {}
    if not isinstance(out, dict):
        raise ConfigError("spec.output: expected an object")
    csv_path = _get(out, "csv_path", "spec.output", str, stem + ".csv")
    json_path = _get(out, "json_path", "spec.output", str, stem + ".json")
    base = out_dir if out_dir is not None else os.getcwd()
    return os.path.join(base, csv_path), os.path.join(base, json_path)


def run(spec_path, out_dir=None, timing=False, stderr=None):
    stderr = stderr or sys.stderr
    try:
        with open(spec_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {spec_path}: {exc}", file=stderr)
        return EXIT_IO
    start = time.perf_counter()
    try:
        spec = json.loads(text)
        csv_path, json_path = _output_paths(spec, spec_path, out_dir)
        csv_text, summary = execute(spec)
    except json.JSONDecodeError as exc:
        print(f"error: spec is not valid JSON: {exc}", file=stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: invalid config: {exc}", file=stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        step = f" at step {exc.step}" if exc.step is not None else ""
        print(f"error: numerical failure in stage {exc.stage!r}{step}: {exc}", file=stderr)
        return EXIT_NUMERICAL
    elapsed = time.perf_counter() - start
    if timing:
        summary["wall_time_seconds"] = elapsed
    try:
        _atomic_write(csv_path, csv_text)
        _atomic_write(json_path, _json_text(summary) + "\n")
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=stderr)
        return EXIT_IO
    print(f"wrote {csv_path} and {json_path} in {elapsed:.2f}s", file=stderr)
    return EXIT_OK


def list_families():
    width = max(len(k) for k in FAMILIES)
    lines = []
    for label, (params, about) in FAMILIES.items():
        lines.append(f"{label:<{width}}  params: {params}")
        lines.append(f"{'':<{width}}  {about}")
    return "\n".join(lines) + "\n"


def main(argv=None):
    parser = _Parser(prog="magnus-midpoint", description="Exponential midpoint experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment spec")
    p_run.add_argument("spec", help="path to the JSON experiment spec")
    p_run.add_argument("--out-dir", default=None, help="directory the output paths are resolved against")
    p_run.add_argument("--timing", action="store_true", help="record wall time in the JSON (not byte-stable)")
    sub.add_parser("list-families", help="list built-in operator families")
    sub.add_parser("version", help="print the version")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.spec, args.out_dir, args.timing)
    if args.command == "list-families":
        sys.stdout.write(list_families())
        return EXIT_OK
    print(__version__)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
