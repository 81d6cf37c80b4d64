"""Command-line front end.

Usage::

    strongdamp COMMAND [--config PATH] [--out DIR] [--threads N]
                       [--precision {double,extended}] [--seed N]

Commands: formal, trees, resum, borel, oracle, qp, compare.  The
configuration is an INI file with a ``[problem]`` section and one section
per command.  Every run writes its artifacts to ``--out`` together with
``manifest.json``, which lists each file with its sha256 digest, the
config hash and the library versions.

Exit codes: 0 success, 2 configuration error, 3 numerical-domain error
(the typed error is printed to stderr as JSON).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import platform
import re
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalDomainError
from .fourier import FrequencyVector, _parse_float, exponential_forcing, trig_forcing
from .formal import NonlinearitySpec, ProblemSpec

COMMANDS = ("formal", "trees", "resum", "borel", "oracle", "qp", "compare")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN = 0, 2, 3


# ---------------------------------------------------------------------------
# configuration


def _float(tok: str) -> float:
    """Decimal or hexadecimal float."""
    return _parse_float(tok.strip())


def _int(tok: str) -> int:
    return int(tok.strip())


def _bool(tok: str) -> bool:
    t = tok.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {tok!r}")


def _floats(tok: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", tok.strip()) if p]
    return tuple(_float(p) for p in parts)


def _opt_float(tok: str):
    return None if tok.strip().lower() in ("", "none", "auto") else _float(tok)


def _terms(tok: str) -> tuple:
    """``nu_1 .. nu_d amplitude`` entries separated by ';'."""
    out = []
    for entry in tok.split(";"):
        parts = entry.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise ValueError(f"term {entry.strip()!r} needs a mode and an amplitude")
        out.append((tuple(int(p) for p in parts[:-1]), _float(parts[-1])))
    return tuple(out)


def _choice(*options):
    def parse(tok: str) -> str:
        t = tok.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t
    return parse


def _nonlinearity(tok: str) -> str:
    t = tok.strip()
    if t == "quadratic":
        return t
    if t.startswith("poly:"):
        _floats(t[5:])
        return t
    raise ValueError("expected 'quadratic' or 'poly: a0 a1 a2 ...'")


#: section -> key -> (parser, default text)
SCHEMA = {
    "problem": {
        "alpha": (_float, "1.0"),
        "sin": (_terms, "1 0.5"),
        "cos": (_terms, ""),
        "exponential": (_floats, ""),
        "omega": (_floats, "1.0"),
        "tau": (_float, "0"),
        "C0": (_opt_float, "auto"),
        "epsilon": (_float, "0.05"),
        "nonlinearity": (_nonlinearity, "quadratic"),
    },
    "formal": {
        "K": (_int, "10"),
        "random_checks": (_int, "0"),
    },
    "trees": {
        "k_max": (_int, "5"),
        "nu_max": (_int, "3"),
        "expansion": (_choice("formal", "resummed", "both"), "both"),
    },
    "resum": {
        "K": (_int, "12"),
        "R": (_float, "0.2"),
        "grid": (_int, "40"),
        "nu_max": (_int, "50"),
    },
    "borel": {
        "K": (_int, "16"),
        "method": (_choice("plain", "robust"), "robust"),
        "asymptotic_N_max": (_int, "0"),
        "times": (_int, "16"),
    },
    "oracle": {
        "tol": (_float, "1e-12"),
        "samples": (_int, "256"),
        "nu_max": (_int, "8"),
    },
    "qp": {
        "K": (_int, "8"),
        "K_M": (_int, "3"),
        "radius": (_int, "30"),
        "cutoff": (_choice("sharp", "smooth"), "sharp"),
        "R": (_float, "0.2"),
        "lambda": (_float, "1.0"),
        "T_long": (_float, "200"),
        "audit": (_bool, "yes"),
        "shadow": (_bool, "yes"),
    },
    "compare": {
        "K_resum": (_int, "12"),
        "K_borel": (_int, "16"),
        "samples": (_int, "64"),
        "tolerance": (_float, "1e-6"),
    },
}


@dataclass
class RunConfig:
    """Parsed configuration: raw text per key plus the parsed values."""

    raw: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    def __getitem__(self, item):
        return self.values[item]

    @classmethod
    def parse(cls, text: str = "") -> "RunConfig":
        lines = _line_index(text)
        cp = configparser.RawConfigParser(inline_comment_prefixes=("#",),
                                          comment_prefixes=("#",))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.DuplicateOptionError as exc:
            raise ConfigError(f"duplicate key '{exc.option}' in [{exc.section}]",
                              exc.lineno, exc.option) from None
        except configparser.DuplicateSectionError as exc:
            raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigError("key outside of any section", exc.lineno) from None
        except configparser.ParsingError as exc:
            lineno = exc.errors[0][0] if exc.errors else None
            raise ConfigError("unparseable line", lineno) from None
        raw = {s: dict(keys_defaults) for s, keys_defaults in
               ((s, {k: d for k, (_, d) in keys.items()}) for s, keys in SCHEMA.items())}
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lines.get((section, None)),
                                  section)
            for key, val in cp.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key '{key}' in [{section}]",
                                      lines.get((section, key)), key)
                raw[section][key] = val
        values = {}
        for section, keys in SCHEMA.items():
            values[section] = {}
            for key, (parser, _) in keys.items():
                try:
                    values[section][key] = parser(raw[section][key])
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"bad value for '{key}' in [{section}]: {exc}",
                                      lines.get((section, key)), key) from None
        out = cls(raw, values)
        out._validate(lines)
        return out

    def _validate(self, lines):
        p = self.values["problem"]

        def fail(key, msg, section="problem"):
            raise ConfigError(msg, lines.get((section, key)), key)

        if not p["omega"] or any(w == 0 for w in p["omega"]):
            fail("omega", "omega components must be nonzero")
        if p["epsilon"] <= 0:
            fail("epsilon", "epsilon must be positive")
        if p["exponential"] and len(p["exponential"]) != 3:
            fail("exponential", "exponential forcing needs 'F xi N'")
        d = len(p["omega"])
        for key in ("sin", "cos"):
            for nu, _ in p[key]:
                if len(nu) != d:
                    fail(key, f"mode {nu} has dimension {len(nu)}, omega has {d}")
        for section, keys in SCHEMA.items():
            for key, (parser, _) in keys.items():
                if parser is _int and key not in ("random_checks", "asymptotic_N_max"):
                    if self.values[section][key] < 1:
                        fail(key, f"'{key}' must be positive", section)
        if self.values["qp"]["K_M"] not in (1, 3):
            fail("K_M", "K_M must be 1 or 3", "qp")

    def to_text(self) -> str:
        """Canonical echo; parsing it again gives the same values."""
        buf = io.StringIO()
        for section, keys in SCHEMA.items():
            buf.write(f"[{section}]\n")
            for key in keys:
                buf.write(f"{key} = {self.raw[section][key]}\n")
            buf.write("\n")
        return buf.getvalue()

    def problem(self) -> ProblemSpec:
        p = self.values["problem"]
        d = len(p["omega"])
        if p["exponential"]:
            F, xi, N = p["exponential"]
            forcing = exponential_forcing(p["alpha"], F, xi, int(N), d=d)
        else:
            forcing = trig_forcing(p["alpha"], p["sin"], p["cos"], d=d)
        freq = FrequencyVector(p["omega"], p["C0"], p["tau"] if d > 1 else 0.0)
        g = p["nonlinearity"]
        nl = NonlinearitySpec.quadratic() if g == "quadratic" else \
            NonlinearitySpec.polynomial(_floats(g[5:]))
        return ProblemSpec(forcing, freq, nl, p["epsilon"])


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number; (section, None) for headers."""
    out = {}
    section = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#") or line[:1].isspace():
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), i)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m:
            out.setdefault((section, m.group(1)), i)
    return out


# ---------------------------------------------------------------------------
# artifact output


class Artifacts:
    """Atomic writer that records every artifact for the manifest."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.paths = []

    def _commit(self, name: str, data: bytes):
        path = os.path.join(self.out_dir, name)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        if name not in self.paths:
            self.paths.append(name)

    def text(self, name: str, content: str):
        self._commit(name, content.encode())

    def json(self, name: str, obj):
        self.text(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def csv(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        self.text(name, buf.getvalue())

    def via(self, name: str, writer):
        """Let ``writer(path)`` produce the file, then move it into place."""
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=".tmp-")
        os.close(fd)
        try:
            writer(tmp)
            with open(tmp, "rb") as fh:
                data = fh.read()
        finally:
            os.unlink(tmp)
        self._commit(name, data)

    def manifest(self, command: str, config: RunConfig, flags: dict):
        files = []
        for name in self.paths:
            with open(os.path.join(self.out_dir, name), "rb") as fh:
                files.append({"path": name, "sha256": hashlib.sha256(fh.read()).hexdigest()})
        text = config.to_text()
        self.json("manifest.json", {
            "command": command,
            "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
            "config": text,
            "flags": flags,
            "versions": _versions(),
            "artifacts": files,
        })


def _cell(v):
    if isinstance(v, (float, np.floating)):
        # + 0.0 folds a negative zero into 0
        return "%.17g" % (v + 0.0)
    return v


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, (np.complexfloating,)):
        return [float(v.real), float(v.imag)]
    raise TypeError(f"not serializable: {type(v).__name__}")


def _versions() -> dict:
    import mpmath
    import scipy

    from . import __version__
    return {"strongdamp": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "mpmath": mpmath.__version__}


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _order_rows(e):
    for k, s in enumerate(e.orders):
        for nu in s.support():
            v = s[nu]
            yield [k, *nu, float(v.real), float(v.imag)]


def _write_orders(art: Artifacts, e, prefix: str = ""):
    d = e.problem.d
    art.csv(prefix + "orders.csv", ["k"] + [f"nu{i + 1}" for i in range(d)] + ["re", "im"],
            _order_rows(e))
    art.csv(prefix + "constants.csv", ["k", "c_re", "c_im"],
            ([k, float(complex(c).real), float(complex(c).imag)]
             for k, c in enumerate(e.constants)))


# ---------------------------------------------------------------------------
# commands


def cmd_formal(cfg: RunConfig, art: Artifacts, flags: dict):
    from .formal import compatibility_residual, formal_orders, growth_diagnostic, support_check

    P = cfg.problem()
    K = cfg["formal"]["K"]
    e = formal_orders(P, K)
    _write_orders(art, e)
    rep = support_check(e, tol=1e-300)
    art.csv("support.csv", ["k", "max_norm", "bound", "ok"],
            ([k, r, b, int(ok)] for k, r, b, ok in rep.rows))
    summary = {"K": K, "c0": P.c0, "support_ok": rep.ok,
               "compatibility_residual": float(np.max(np.abs(compatibility_residual(e))))}
    if K >= 6:
        fit = growth_diagnostic(e)
        art.csv("growth.csv", ["k", "m_k"], ([k, float(m)] for k, m in enumerate(fit.norms)))
        summary["growth"] = {"best": fit.best, "sigma_hat": fit.sigma_hat, "ratio": fit.ratio,
                             "models": fit.models}
    n = cfg["formal"]["random_checks"]
    if n:
        rng = np.random.default_rng(flags["seed"])
        rows = []
        for _ in range(n):
            a, b = rng.uniform(0.1, 10), rng.uniform(0, 1)
            Q = ProblemSpec(trig_forcing(a, [(1, b)]), P.freq)
            q = formal_orders(Q, 2)
            c = [complex(x) for x in q.constants]
            rows.append([a, b, c[0].real, c[1].real, abs(c[0] - math.sqrt(a)), abs(c[1])])
        art.csv("compatibility_checks.csv", ["alpha", "beta", "c0", "c1", "err_c0", "err_c1"],
                rows)
        summary["random_checks_max_error"] = max(max(r[4], r[5]) for r in rows)
    art.json("formal.json", summary)


def cmd_trees(cfg: RunConfig, art: Artifacts, flags: dict):
    from .formal import formal_orders
    from .fourier import mode_norm, modes_in_ball
    from .resummation import resummed_orders
    from .trees import count_audit, enumerate_trees, value

    P = cfg.problem()
    c = cfg["trees"]
    kinds = ("formal", "resummed") if c["expansion"] == "both" else (c["expansion"],)
    rows, violations, worst = [], [], 0.0
    for kind in kinds:
        if kind == "formal":
            e = formal_orders(P, c["k_max"])
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                e = resummed_orders(P, c["k_max"])
        for k in range(1, c["k_max"] + 1):
            for row in modes_in_ball(P.d, c["nu_max"]):
                nu = tuple(int(n) for n in row)
                count, total = 0, 0j
                for t in enumerate_trees(k, nu, P, kind):
                    count += 1
                    total += value(t, P, kind)
                    rec = count_audit(t)
                    if not rec.ok:
                        violations.append({"k": k, "nu": list(nu), "expansion": kind,
                                           "failed": rec.violations})
                ref = e.orders[k][nu]
                err = abs(total - ref) / max(abs(ref), 1e-300) if count or ref else 0.0
                if abs(ref) < 1e-300 and count:
                    err = abs(total)
                worst = max(worst, err)
                rows.append([kind, k, *nu, mode_norm(nu), count, float(total.real),
                             float(total.imag), float(complex(ref).real),
                             float(complex(ref).imag), float(err)])
    d = P.d
    art.csv("trees.csv", ["expansion", "k"] + [f"nu{i + 1}" for i in range(d)]
            + ["norm", "trees", "tree_re", "tree_im", "rec_re", "rec_im", "rel_err"], rows)
    art.json("trees.json", {"max_rel_err": worst, "count_audit_violations": violations,
                            "classes": len(rows)})


def cmd_resum(cfg: RunConfig, art: Artifacts, flags: dict):
    from .resummation import (decay_ratio, divisor_grid_audit, eps3, radius_estimate,
                              residual, resummed_orders)

    P = cfg.problem()
    c = cfg["resum"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        e = resummed_orders(P, c["K"])
    _write_orders(art, e)
    art.csv("norms.csv", ["k", "m_k"], ([k, float(m)] for k, m in enumerate(e.norms())))
    out = {"epsilon": P.epsilon, "K": c["K"], "residual": residual(e.partial_sum(), P),
           "decay_ratio": decay_ratio(e), "radius_estimate": radius_estimate(e),
           "certified_radius": eps3(P), "warnings": [str(w.message) for w in caught]}
    if P.d == 1:
        worst, n = divisor_grid_audit(P.freq, c["R"], c["grid"], c["nu_max"])
        out["domain"] = {"R": c["R"], "grid_points": n, "min": worst.minimum,
                         "threshold": worst.threshold, "worst_epsilon": _cplx(worst.epsilon),
                         "worst_mode": list(worst.worst_mode), "ok": worst.ok}
    art.json("resum.json", out)


def cmd_borel(cfg: RunConfig, art: Artifacts, flags: dict):
    from .borel import asymptoticity_check, borel_pade_sum
    from .formal import formal_orders

    P = cfg.problem()
    c = cfg["borel"]
    e = formal_orders(P, c["K"])
    res = borel_pade_sum(e, P.epsilon, method=c["method"], precision=flags["precision"])
    T = 2 * np.pi / P.freq.omega[0]
    times = np.arange(c["times"]) * T / c["times"]
    art.json("borel.json", res.report(times))
    art.csv("borel_modes.csv", ["nu", "re", "im", "error", "L", "M"],
            ([m.nu[0], float(m.value.real), float(m.value.imag), m.error, m.L, m.M]
             for m in res.modes))
    if c["asymptotic_N_max"]:
        rep = asymptoticity_check(P, P.epsilon, c["asymptotic_N_max"])
        art.via("remainders.csv", rep.write_csv)
        art.json("asymptotic.json", rep.to_dict())


def cmd_oracle(cfg: RunConfig, art: Artifacts, flags: dict):
    from .oracle import find_periodic_orbit

    P = cfg.problem()
    c = cfg["oracle"]
    orb = find_periodic_orbit(P, tol=c["tol"])
    art.json("orbit.json", {**orb.to_dict(), "attracting": orb.attracting,
                            "iterations": orb.iterations})
    art.via("orbit.csv", orb.sample(c["samples"]).write_csv)
    F = orb.fourier(c["nu_max"], c["samples"])
    art.csv("orbit_fourier.csv", ["nu", "re", "im"],
            ([nu[0], float(F[nu].real), float(F[nu].imag)] for nu in sorted(F.keys())))


def cmd_qp(cfg: RunConfig, art: Artifacts, flags: dict):
    from . import multiscale as ms
    from .oracle import quasi_periodic_probe
    from .resummation import residual

    P = cfg.problem()
    c = cfg["qp"]
    part = ms.default_partition(P, c["radius"], c["cutoff"])
    table = ms.counterterms(P, part, c["K_M"], radius=c["radius"])
    art.json("counterterms.json", table.to_dict())
    art.via("counterterms.csv", table.write_csv)
    xs = ms._populated(P, c["radius"])
    art.csv("scales.csv", ["x", "scale"], ([float(x), ms.assign_scale(x, part)] for x in xs))
    rows = []
    e = None
    for K in range(1, c["K"] + 1):
        e = ms.qp_resummed_orders(P, K, part=part, K_M=c["K_M"])
        rows.append([K, residual(e.partial_sum(), P)])
    _write_orders(art, e)
    art.csv("residual.csv", ["K", "residual"], rows)
    out = {"C0": part.C0, "cutoff": part.cutoff_style, "K": c["K"], "K_M": c["K_M"],
           "leading": _cplx(table.leading(0)), "leading_expected": -2 * P.epsilon * P.c0
           if P.nonlinearity.is_default_quadratic else None,
           "smallness": ms.counterterm_smallness(P, table, c["radius"]),
           "denominator_guard": ms.denominator_guard(P, table, c["radius"]),
           "decay_fit": table.fit_decay(P.freq.tau if P.d > 1 else 1.0)}
    if c["audit"]:
        rep = ms.bound_lemma_audit(P, part, R=c["R"], lam=c["lambda"], radius=c["radius"])
        art.json("audit.json", rep.to_dict())
        out["audit_passed"] = rep.passed
    if c["shadow"]:
        sh = quasi_periodic_probe(P, e.partial_sum(), c["T_long"])
        art.csv("shadow.csv", ["t", "deviation"],
                ([float(t), float(v)] for t, v in zip(sh.times, sh.deviation)))
        out["shadow"] = sh.to_dict()
    art.json("qp.json", out)


def cmd_compare(cfg: RunConfig, art: Artifacts, flags: dict):
    from .borel import borel_pade_sum
    from .formal import formal_orders
    from .oracle import find_periodic_orbit
    from .resummation import evaluate_solution, resummed_orders

    P = cfg.problem()
    if P.d != 1:
        raise ConfigError("compare needs a single frequency", key="omega")
    c = cfg["compare"]
    T = 2 * np.pi / P.freq.omega[0]
    ts = np.arange(c["samples"]) * T / c["samples"]

    def resummed():
        e = resummed_orders(P, c["K_resum"], check_domain=False)
        return evaluate_solution(e, ts)

    def borel():
        e = formal_orders(P, c["K_borel"])
        return borel_pade_sum(e, P.epsilon, precision=flags["precision"]).evaluate(ts)

    def oracle():
        return find_periodic_orbit(P).evaluate(ts)

    names = ("resummed", "borel", "oracle")
    with ThreadPoolExecutor(max_workers=flags["threads"]) as pool:
        futures = [pool.submit(fn) for fn in (resummed, borel, oracle)]
        curves = [np.asarray(f.result(), dtype=float) for f in futures]
    mat = [[float(np.max(np.abs(a - b))) for b in curves] for a in curves]
    art.csv("compare.csv", ["method"] + list(names),
            ([n] + row for n, row in zip(names, mat)))
    art.csv("curves.csv", ["t"] + list(names),
            ([float(t)] + [float(v[i]) for v in curves] for i, t in enumerate(ts)))
    worst = max(max(r) for r in mat)
    art.json("compare.json", {"epsilon": P.epsilon, "matrix": mat, "names": list(names),
                              "max_discrepancy": worst, "tolerance": c["tolerance"],
                              "agree": worst < c["tolerance"]})


HANDLERS = {"formal": cmd_formal, "trees": cmd_trees, "resum": cmd_resum, "borel": cmd_borel,
            "oracle": cmd_oracle, "qp": cmd_qp, "compare": cmd_compare}


# ---------------------------------------------------------------------------
# entry points


def run(command: str, config: RunConfig, out_dir: str, *, threads: int = 1,
        precision: str = "double", seed: int = 0) -> Artifacts:
    """Run one command and write its artifacts plus the manifest."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    flags = {"threads": threads, "precision": precision, "seed": seed}
    art = Artifacts(out_dir)
    art.text("config.ini", config.to_text())
    HANDLERS[command](config, art, flags)
    art.manifest(command, config, flags)
    return art


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strongdamp", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH", help="INI configuration file")
    p.add_argument("--out", metavar="DIR", default="out", help="artifact directory")
    p.add_argument("--threads", metavar="N", type=int, default=1)
    p.add_argument("--precision", choices=("double", "extended"), default="double")
    p.add_argument("--seed", metavar="N", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg = RunConfig.parse(text)
        run(args.command, cfg, args.out, threads=args.threads, precision=args.precision,
            seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDomainError as exc:
        print(json.dumps(exc.to_dict(), default=_jsonable), file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
