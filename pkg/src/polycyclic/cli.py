"""Command-line front end.

    polycyclic <command> [--config PATH] [--out DIR] [--seed N] [--threads N]

Commands: dulac, cyclicity, divide, wronskian, blowup, selftest.  The config
is a JSON object holding the command's parameters (optionally nested under
"parameters"); exact rationals may be given as strings such as "3/7".
Exit codes: 0 ok, 1 computation failed, 2 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy as sp

from . import __version__
from .errors import ConfigError, DomainError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


# ------------------------------------------------------------ formatting


def fmt_float(v) -> str:
    return format(float(v), ".17g")


def fmt_exact(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


class Emitter:
    """Writes CSV/JSON files carrying the tool version and config hash."""

    def __init__(self, out: Path, config_hash: str, seed: int):
        self.out = out
        self.header = f"polycyclic {__version__} config_sha256={config_hash} seed={seed}"
        self.written: list[Path] = []

    def csv(self, name: str, columns: list[str], rows: list[list]) -> Path:
        lines = [f"# {self.header}", ",".join(columns)]
        for row in rows:
            lines.append(",".join(fmt_exact(v) for v in row))
        return self._write(name, "\n".join(lines) + "\n")

    def json(self, name: str, payload: dict) -> Path:
        doc = {"_header": self.header, **payload}
        return self._write(name, json.dumps(doc, indent=2, sort_keys=True, default=fmt_exact) + "\n")

    def _write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text, encoding="utf-8")
        self.written.append(path)
        return path


# ------------------------------------------------------------ config fields


class Fields:
    """Typed access to a config mapping; failures name the field path."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ConfigError(path, "expected an object")
        self.data = data
        self.path = path

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data and self.data[key] is not None

    def raw(self, key: str, default=...):
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise ConfigError(self.sub(key), "required field missing")
            return default
        return self.data[key]

    def integer(self, key: str, default=..., lo=None, hi=None) -> int:
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self.sub(key), f"expected an integer, got {v!r}")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ConfigError(self.sub(key), f"must lie in [{lo}, {hi}], got {v}")
        return v

    def number(self, key: str, default=...) -> float:
        return to_number(self.raw(key, default), self.sub(key))

    def rational(self, key: str, default=...) -> Fraction:
        return to_rational(self.raw(key, default), self.sub(key))

    def array(self, key: str, default=...) -> list:
        v = self.raw(key, default)
        if not isinstance(v, list):
            raise ConfigError(self.sub(key), "expected an array")
        return v


def to_rational(v, path: str) -> Fraction:
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number")
    try:
        if isinstance(v, (int, str)):
            return Fraction(v.strip() if isinstance(v, str) else v)
        if isinstance(v, float):
            return Fraction(v)
    except (ValueError, ZeroDivisionError):
        pass
    raise ConfigError(path, f"expected a number or a rational string, got {v!r}")


def to_number(v, path: str) -> float:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        out = float(v)
    else:
        out = float(to_rational(v, path))
    if not np.isfinite(out):
        raise ConfigError(path, "must be finite")
    return out


def number_list(v, path: str) -> list[float]:
    if not isinstance(v, list):
        raise ConfigError(path, "expected an array of numbers")
    return [to_number(e, f"{path}[{i}]") for i, e in enumerate(v)]


def grid_spec(v, path: str) -> list[float]:
    """Either an explicit array or {"start", "stop", "num"}."""
    if isinstance(v, list):
        return number_list(v, path)
    f = Fields(v, path)
    num = f.integer("num", lo=0, hi=1_000_000)
    return list(np.linspace(f.number("start"), f.number("stop"), num))


# ------------------------------------------------------------ commands


def cmd_dulac(cfg: Fields, em: Emitter, seed: int, threads: int) -> int:
    from .dulac_engine import SaddleDeployment, dulac_coefficients, dulac_ode_oracle

    mu = cfg.number("mu")
    coeffs = cfg.array("a", [])
    arrays = [number_list(c, f"{cfg.sub('a')}[{i}]") for i, c in enumerate(coeffs)]
    N = cfg.integer("N_trunc", 12, lo=1, hi=64)
    grid = grid_spec(cfg.raw("grid", {"start": 0.05, "stop": 0.9, "num": 50}), cfg.sub("grid"))
    if not grid:
        raise ConfigError(cfg.sub("grid"), "grid is empty")
    if any(not (0.01 <= x <= 1.0) for x in grid):
        raise ConfigError(cfg.sub("grid"), "points must lie in [0.01, 1]")
    y_eval = cfg.number("y_eval", 0.5)
    if not (0 < y_eval <= 0.5):
        raise ConfigError(cfg.sub("y_eval"), "must lie in (0, 1/2]")
    if 1 + mu <= 0:
        raise ConfigError(cfg.sub("mu"), "need 1 + mu > 0")
    dep = SaddleDeployment.from_coefficients(mu, arrays)
    model = dulac_coefficients(dep, N, grid=np.array(grid), y_eval=y_eval)
    xs = np.array(grid)
    series = model(xs)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        ode = list(pool.map(lambda x: dulac_ode_oracle(dep, float(x), y_eval), xs))
    rows = []
    worst = 0.0
    for x, s, o in zip(xs, series, ode):
        err = abs(s - o) / abs(o)
        worst = max(worst, err)
        rows.append([float(x), float(s), float(o), err])
    em.csv("dulac.csv", ["x", "d_series", "d_ode", "rel_err"], rows)
    em.json("dulac.json", {
        "r": fmt_float(model.r), "mu": fmt_float(mu), "N_trunc": N, "y_scale": fmt_float(dep.y_scale),
        "max_tail_estimate": fmt_float(model.tail_estimate), "max_rel_err": fmt_float(worst),
        "decay_ok": model.decay_ok, "increasing": model.is_increasing(), "diagnostics": model.diagnostics,
    })
    return EXIT_OK


def cmd_cyclicity(cfg: Fields, em: Emitter, seed: int, threads: int) -> int:
    from .polycycle import PolycycleSpec, count_cycles

    ratios = number_list(cfg.raw("ratios"), cfg.sub("ratios"))
    if not ratios:
        raise ConfigError(cfg.sub("ratios"), "need at least one vertex")
    if any(r <= 0 for r in ratios):
        raise ConfigError(cfg.sub("ratios"), "ratios must be positive")
    k = len(ratios)
    if cfg.has("lambda_grid"):
        raw = cfg.array("lambda_grid")
        grid = []
        for i, row in enumerate(raw):
            vals = number_list(row, f"{cfg.sub('lambda_grid')}[{i}]")
            if len(vals) != k:
                raise ConfigError(f"{cfg.sub('lambda_grid')}[{i}]", f"need {k} values, got {len(vals)}")
            grid.append(vals)
    else:
        axes_raw = cfg.array("lambda_axes")
        if len(axes_raw) != k:
            raise ConfigError(cfg.sub("lambda_axes"), f"need one axis per vertex ({k})")
        axes = [grid_spec(a, f"{cfg.sub('lambda_axes')}[{i}]") for i, a in enumerate(axes_raw)]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = [list(p) for p in zip(*(m.ravel() for m in mesh))]
    if not grid:
        raise ConfigError(cfg.sub("lambda_grid") if cfg.has("lambda_grid") else cfg.sub("lambda_axes"),
                          "parameter grid is empty")
    x_max = cfg.number("x_max", 0.5)
    if not 0 < x_max <= 1:
        raise ConfigError(cfg.sub("x_max"), "must lie in (0, 1]")
    spec = PolycycleSpec.power(ratios, x_max=x_max)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda nu: count_cycles(spec, [nu])[0], grid))
    rows = []
    for i, res in enumerate(results):
        rows.append([i, *res.lambdas, res.count, ";".join(fmt_float(r) for r in res.roots),
                     ";".join(str(int(f)) for f in res.flags)])
    cols = ["index", *[f"lambda{j + 1}" for j in range(k)], "count", "roots", "flags"]
    em.csv("cyclicity.csv", cols, rows)
    em.json("cyclicity.json", {
        "ratios": [fmt_float(r) for r in ratios], "parameters": len(grid),
        "max_count": max(r.count for r in results),
        "max_multiplicity_flag": any(any(r.flags) for r in results),
        "flagged_parameters": sum(1 for r in results if any(r.flags)),
        "diagnostics": sorted({d for r in results for d in r.diagnostics}),
    })
    return EXIT_OK


def _parse_poly(text, names, path):
    from .division import LocalPoly

    if not isinstance(text, str):
        raise ConfigError(path, "expected a polynomial string")
    syms = sp.symbols(names)
    try:
        expr = sp.sympify(text.replace("^", "**"), locals=dict(zip(names, syms)))
        poly = sp.Poly(expr, *syms, domain="QQ")
    except (sp.SympifyError, sp.PolynomialError, TypeError, SyntaxError) as exc:
        raise ConfigError(path, f"cannot parse polynomial: {exc}") from None
    data = {m: Fraction(int(c.p), int(c.q)) for m, c in poly.terms()}
    return LocalPoly(len(names), data)


def _poly_str(p, names) -> str:
    if p.is_zero():
        return "0"
    out = ""
    for m, c in sorted(p.terms.items(), key=lambda t: (sum(t[0]), tuple(-e for e in t[0]))):
        mono = "*".join(f"{n}^{e}" if e > 1 else n for n, e in zip(names, m) if e)
        sign, c = ("-" if c < 0 else "+"), abs(c)
        term = fmt_exact(c) if not mono else (mono if c == 1 else f"{fmt_exact(c)}*{mono}")
        out += (f"-{term}" if sign == "-" else term) if not out else f" {sign} {term}"
    return out


def cmd_divide(cfg: Fields, em: Emitter, seed: int, threads: int) -> int:
    from .division import MonomialOrder, divide

    names = cfg.array("variables")
    if not names or not all(isinstance(n, str) and n.isidentifier() for n in names):
        raise ConfigError(cfg.sub("variables"), "expected a non-empty array of identifiers")
    gens = [_parse_poly(g, names, f"{cfg.sub('generators')}[{i}]") for i, g in enumerate(cfg.array("generators"))]
    f = _parse_poly(cfg.raw("f"), names, cfg.sub("f"))
    precision = cfg.integer("precision", None, lo=1) if cfg.has("precision") else None
    weights = None
    if cfg.has("weights"):
        weights = [to_rational(w, f"{cfg.sub('weights')}[{i}]") for i, w in enumerate(cfg.array("weights"))]
        if len(weights) != len(names) or any(w <= 0 for w in weights):
            raise ConfigError(cfg.sub("weights"), "need one positive weight per variable")
    order = MonomialOrder(len(names), weights)
    res = divide(f, gens, order, precision)
    em.json("divide.json", {
        "variables": names,
        "basis": [_poly_str(a, names) for a in res.basis],
        "corners": [list(c) for c in res.diagram.corners],
        "quotients": [_poly_str(q, names) for q in res.quotients],
        "remainder": _poly_str(res.remainder, names),
        "member": res.remainder.is_zero(),
        "precision": res.precision,
        "exact": res.exact,
    })
    return EXIT_OK


def cmd_wronskian(cfg: Fields, em: Emitter, seed: int, threads: int) -> int:
    from .chi_blocks import ChiDerivation, wronskian
    from .euler_calculus import CoeffRing

    q1 = cfg.integer("q1", lo=0, hi=3)
    n = cfg.integer("n", lo=1, hi=4)
    res = wronskian(ChiDerivation(CoeffRing.standard(q1), q1), n)
    rep = res.report()
    rep["Delta"] = f"({rep['b_n']})*x^({rep['s_n']})"
    r_subs = {sp.Symbol(f"mu{j}"): sp.Symbol(f"r{j}") - 1 for j in range(1, q1 + 1)}
    rep["s_n_in_r"] = str(sp.expand(res.s_n.as_expr().subs(r_subs)))
    rep["b_n_in_r"] = str(sp.factor(res.b_n.as_expr().subs(r_subs)))
    rep["monomials"] = [list(m) for m in res.monomials]
    em.json("wronskian.json", rep)
    return EXIT_OK


def cmd_blowup(cfg: Fields, em: Emitter, seed: int, threads: int) -> int:
    from .polycycle import blowup_verify

    k = cfg.integer("k", 2, lo=2, hi=4)
    rep = blowup_verify(k)
    em.json("blowup.json", {
        "k": k, "s_k": str(rep.s_k), "pushforward": rep.pushforward, "factorization": rep.factorization,
        "proportional": rep.proportional, "first_integrals": rep.first_integrals,
        "T": rep.details["T"], "result": "identity holds" if rep.holds else "identity fails",
    })
    return EXIT_OK if rep.holds else EXIT_FAILED


def cmd_selftest(cfg: Fields, em: Emitter, seed: int, threads: int) -> int:
    from .selftest import run_suite

    size = cfg.integer("size", 10, lo=1, hi=1000)
    checks = run_suite(seed, size)
    em.json("selftest.json", {
        "seed": seed, "size": size, "passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    })
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


COMMANDS = {
    "dulac": cmd_dulac,
    "cyclicity": cmd_cyclicity,
    "divide": cmd_divide,
    "wronskian": cmd_wronskian,
    "blowup": cmd_blowup,
    "selftest": cmd_selftest,
}


# ------------------------------------------------------------ entry point


def load_config(path: str | None, command: str) -> tuple[dict, str]:
    if path is None:
        raw = {}
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be an object")
    digest = hashlib.sha256(json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()).hexdigest()
    if "command" in raw and raw["command"] != command:
        raise ConfigError("command", f"config is for {raw['command']!r}, not {command!r}")
    return raw, digest


def resolve_threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("POLYCYCLIC_THREADS")
    if env:
        try:
            v = int(env)
        except ValueError:
            raise ConfigError("POLYCYCLIC_THREADS", f"expected an integer, got {env!r}") from None
        if v < 1:
            raise ConfigError("POLYCYCLIC_THREADS", "must be positive")
        return v
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polycyclic", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"polycyclic {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default="polycyclic-out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for randomized sweeps")
    parser.add_argument("--threads", type=int, help="worker threads (default: POLYCYCLIC_THREADS or 1)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw, digest = load_config(args.config, args.command)
        threads = resolve_threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads", "must be positive")
        params = raw.get("parameters", {k: v for k, v in raw.items() if k not in ("command", "seed")})
        cfg = Fields(params, "parameters" if "parameters" in raw else "")
        seed = args.seed if args.seed is not None else raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed", "expected an integer")
        em = Emitter(Path(args.out), digest, seed)
        code = COMMANDS[args.command](cfg, em, seed, threads)
    except ConfigError as exc:
        print(f"polycyclic: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"polycyclic: ill-posed input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report any computational failure as exit 1
        print(f"polycyclic: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for path in em.written:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
