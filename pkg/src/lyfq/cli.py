"""Command-line interface.

Every subcommand prints one JSON document ``{"config": ..., "result": ...}``
to stdout; the ``config`` part can be saved and fed back with
``lyfq replay CONFIG.json`` to reproduce the run.

Exit codes: 0 ok, 2 configuration error, 3 verification failed,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gapdist, lycheck, nuij, polycore, torusdyn, zeroline
from .ellexpr import EllParseError, parse_ell, parse_vector
from .randutil import SeededStream, haar_unitary
from .uniroots import OffCircleRoot, RootFindingError

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 2, 3, 4
TWO_PI = 2 * np.pi


class ConfigError(ValueError):
    pass


class VerificationFailed(RuntimeError):
    def __init__(self, msg, payload=None):
        super().__init__(msg)
        self.payload = payload


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        self.options = dict(sorted(self.options.items()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        doc = json.loads(text)
        if "subcommand" not in doc:
            raise ConfigError("config lacks 'subcommand'")
        return cls(doc["subcommand"], doc.get("options", {}))


# -- inputs ---------------------------------------------------------------------

_BUILTIN = re.compile(r"^(running|binomial|product|haar|squared-binomial|two-binomial)(?::(.*))?$")


def load_poly(spec: str) -> polycore.MultiPoly:
    """A JSON file path or a builtin: ``running``, ``binomial:1,1``, ``product:1,1,1``,
    ``haar:N[:SEED]``, ``squared-binomial``, ``two-binomial:PHI``."""
    if os.path.exists(spec):
        try:
            return polycore.load(spec)
        except (ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{spec}: {exc}") from exc
    m = _BUILTIN.match(spec)
    if not m:
        raise ConfigError(f"no such polynomial file or builtin: {spec!r}")
    name, arg = m.groups()
    try:
        if name == "running":
            return polycore.running_example()
        if name == "binomial":
            return polycore.binomial([int(v) for v in (arg or "1,1").split(",")])
        if name == "product":
            return polycore.product_binomial([int(v) for v in (arg or "1,1").split(",")])
        if name == "haar":
            parts = (arg or "4").split(":")
            seed = int(parts[1]) if len(parts) > 1 else 0
            return polycore.determinantal(haar_unitary(int(parts[0]), SeededStream(seed)))
        if name == "squared-binomial":
            return polycore.binomial((1, 1)) ** 2
        phi = parse_vector(arg or "pi/3")[0]
        return polycore.binomial((1, 1)) * polycore.binomial((1, 1), phi)
    except (ValueError, EllParseError) as exc:
        raise ConfigError(f"bad builtin {spec!r}: {exc}") from exc


def _ell(text: str, n: int) -> np.ndarray:
    try:
        v = np.array(parse_ell(text))
    except EllParseError as exc:
        raise ConfigError(f"--ell: {exc}") from exc
    if v.size != n:
        raise ConfigError(f"--ell has {v.size} entries, polynomial has {n} variables")
    return v


def _vec(text, n, name):
    if text is None:
        return None
    try:
        v = np.array(parse_vector(text))
    except EllParseError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if v.size != n:
        raise ConfigError(f"{name} needs {n} entries")
    return v


def _ints(text, name):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"{name}: expected comma-separated integers") from exc


# -- outputs --------------------------------------------------------------------

def fmt(x) -> str:
    return repr(float(x)) if np.isfinite(x) else str(x)


def write_csv(path, header, rows):
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def read_distribution(path) -> gapdist.GapDistribution:
    """Read a samples CSV (``gap,weight``) or a histogram CSV (``bin_left,bin_right,mass``)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty file")
    head = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if head[:2] == ["gap", "weight"]:
        return gapdist.GapDistribution(data[:, 0], data[:, 1], (), {"source": path})
    if head == ["bin_left", "bin_right", "mass"]:
        keep = data[:, 2] > 0
        mid = 0.5 * (data[keep, 0] + data[keep, 1])
        return gapdist.GapDistribution(mid, data[keep, 2], (), {"source": path})
    raise ConfigError(f"{path}: unrecognized header {head}")


def write_distribution(g: gapdist.GapDistribution, opts: dict, atoms=None):
    if opts.get("samples"):
        write_csv(opts["samples"], ["gap", "weight"], zip(g.gaps, g.weights))
    if opts.get("hist"):
        edges, mass = g.histogram(bins=int(opts.get("bins", 60)))
        write_csv(opts["hist"], ["bin_left", "bin_right", "mass"], zip(edges[:-1], edges[1:], mass))
    if opts.get("cdf"):
        grid = np.linspace(0, float(g.gaps.max()), int(opts.get("cdf_points", 400)))
        write_csv(opts["cdf"], ["x", "cdf"], zip(grid, g.cdf(grid)))
    if opts.get("atoms") and atoms is not None:
        write_csv(opts["atoms"], ["location", "mass"], [(a.location, a.mass) for a in atoms])


def _summary(g, atoms):
    return {"samples": len(g), "mean_gap": gapdist.mean_gap(g), "max_gap": float(g.gaps.max()),
            "atoms": [{"location": a.location, "mass": a.mass} for a in atoms]}


# -- subcommands ------------------------------------------------------------------

def cmd_verify(o):
    p = load_poly(o["poly"])
    rep = lycheck.verify(p, trials=o["trials"], degree_cap=o["degree_cap"],
                         rng=SeededStream(o["seed"]), K=o["K"], circle_tol=o["circle_tol"])
    out = rep.to_dict()
    if rep.verdict != "pass":
        raise VerificationFailed("Lee-Yang battery failed", out)
    return out


def cmd_zeros(o):
    p = load_poly(o["poly"])
    ell = _ell(o["ell"], p.n)
    a, b = float(o["from"]), float(o["to"])
    zs = zeroline.find_zeros(p, ell, a, b, x0=_vec(o.get("x0"), p.n, "--x0"))
    write_csv(o.get("out"), ["x", "mult"], zip(zs.x, zs.mult.tolist()))
    bound = zeroline.max_gap_bound(p.degree, ell)
    Ts = [T for T in o["windows"] if T <= b - a]
    dens = zeroline.density_check(zs, p.degree, Ts) if Ts else None
    mg = zeroline.max_gap_check(zs)
    res = {"zeros": len(zs), "count_with_mult": zs.count, "density_error": dens,
           "density_bound": p.total_degree, "windows": Ts, "max_gap": mg, "max_gap_bound": bound,
           "diagnostics": zs.diagnostics}
    if o.get("cross_validate"):
        res["cross_validation"] = zeroline.cross_validate(p, ell, a, b, zs=zs).to_dict()
    bad = (dens is not None and dens > p.total_degree) or mg > bound + 1e-9 or \
        (o.get("cross_validate") and not res["cross_validation"]["matched"])
    if bad:
        raise VerificationFailed("zero-set validators failed", res)
    return res


def cmd_gaps(o):
    p = load_poly(o["poly"])
    ell = _ell(o["ell"], p.n)
    zs = zeroline.find_zeros(p, ell, float(o["from"]), float(o["to"]),
                             x0=_vec(o.get("x0"), p.n, "--x0"))
    g = gapdist.empirical_gaps(zs, p.degree)
    atoms = gapdist.detect_atoms(g, o.get("atom_window"), o["atom_threshold"])
    write_distribution(g, o, atoms)
    return dict(_summary(g, atoms), max_gap_bound=g.meta["max_gap_bound"],
                mean_gap_expected=TWO_PI / float(np.dot(p.degree, ell)))


def cmd_nu1(o):
    p = load_poly(o["poly"])
    g = gapdist.nu_one(p, o["count"], SeededStream(o["seed"]))
    atoms = gapdist.detect_atoms(g, o.get("atom_window"), o["atom_threshold"])
    write_distribution(g, o, atoms)
    return dict(_summary(g, atoms), mean_gap_expected=TWO_PI / p.total_degree)


def cmd_nuq(o):
    p = load_poly(o["poly"])
    k = _ints(o["k"], "--k")
    if len(k) != p.n:
        raise ConfigError(f"--k needs {p.n} entries")
    g = gapdist.nu_rational(p, k, o["m"], o["count"], SeededStream(o["seed"]))
    atoms = gapdist.detect_atoms(g, o.get("atom_window"), o["atom_threshold"])
    write_distribution(g, o, atoms)
    return _summary(g, atoms)


def cmd_perturb(o):
    p = load_poly(o["poly"])
    x = _vec(o.get("anchor"), p.n, "--anchor")
    if x is None:
        x = nuij.choose_anchor(p, rng=SeededStream(o["seed"]))
    q = nuij.regularize(p, x, o["lam"], o.get("steps"))
    if o.get("out"):
        polycore.save(q, o["out"])
    return {"anchor": x.tolist(), "lambda": o["lam"],
            "steps": p.total_degree if o.get("steps") is None else o["steps"],
            "degree": list(q.degree), "scale": q.scale, "polynomial": json.loads(polycore.to_json(q))}


def _box(text, n):
    """``"lo:hi,lo:hi"``; empty slots leave a coordinate unconstrained."""
    parts = text.split(",")
    if len(parts) > n:
        raise ConfigError("--box has too many coordinates")
    lims = []
    for s in parts:
        if not s.strip():
            lims.append((0.0, TWO_PI))
            continue
        try:
            lo, hi = s.split(":")
            lims.append((parse_vector(lo)[0], parse_vector(hi)[0]))
        except (ValueError, EllParseError) as exc:
            raise ConfigError(f"--box: {exc}") from exc
    lims += [(0.0, TWO_PI)] * (n - len(lims))
    lo = np.array([a for a, _ in lims])
    hi = np.array([b for _, b in lims])
    return lambda x: np.all((x >= lo) & (x <= hi), axis=-1).astype(float)


def cmd_ergodic(o):
    p = load_poly(o["poly"])
    ell = _ell(o["ell"], p.n)
    h = _box(o["box"], p.n)
    orbit = torusdyn.ergodic_orbit_average(p, ell, h, o["N"], _vec(o.get("x0"), p.n, "--x0"))
    space = torusdyn.ergodic_space_average(p, ell, h, o["count"], SeededStream(o["seed"]))
    return {"orbit_avg": orbit, "space_avg": space.value, "mc_stderr": space.stderr,
            "excluded_samples": space.excluded}


def cmd_compare(o):
    g1, g2 = read_distribution(o["a"]), read_distribution(o["b"])
    return {"ks": gapdist.ks_distance(g1, g2), "w1": gapdist.wasserstein1(g1, g2)}


# -- demo data ----------------------------------------------------------------------

def _torus_curve(p, ny=400):
    ys = np.linspace(0, TWO_PI, ny, endpoint=False)[1:]
    base = np.stack([ys, np.zeros_like(ys)], axis=1)
    th = zeroline.raw_angles(p, base)
    rows = []
    for j in range(th.shape[1]):
        pts = np.mod(base + th[:, j:j + 1], TWO_PI)
        rows += [(j + 1, y, t, a, b) for y, t, (a, b) in zip(ys, th[:, j], pts)]
    return rows


def _line_data(p, ell, T, out, tag):
    zs = zeroline.find_zeros(p, ell, 0.0, T)
    pts = np.mod(np.multiply.outer(zs.x, ell), TWO_PI)
    write_csv(os.path.join(out, f"{tag}_zeros.csv"), ["t", "mult", "x1", "x2"],
              [(t, int(m), a, b) for t, m, (a, b) in zip(zs.x, zs.mult, pts)])
    ts = np.linspace(0, T, 2000)
    write_csv(os.path.join(out, f"{tag}_secular.csv"), ["t", "g"],
              zip(ts, zeroline.secular_value(p, ell, ts)))
    write_csv(os.path.join(out, f"{tag}_zero_set.csv"), ["layer", "y", "theta", "x1", "x2"],
              _torus_curve(p))
    return zs


def cmd_demo(o):
    fig, out, seed = o["figure"], o["outdir"], o["seed"]
    os.makedirs(out, exist_ok=True)
    R = polycore.running_example()
    ell = np.array([5 * np.pi / 22, 1.0])
    res = {"figure": fig, "outdir": out}
    if fig == 1:
        zs = _line_data(R, ell, 6 * np.pi, out, "fig1")
        res["zeros"] = len(zs)
    elif fig == 2:
        x = nuij.choose_anchor(R, rng=SeededStream(seed))
        Rl = nuij.regularize(R, x, 0.2)
        polycore.save(Rl, os.path.join(out, "fig2_perturbed.json"))
        z0 = _line_data(R, ell, 6 * np.pi, out, "fig2_singular")
        z1 = _line_data(Rl, ell, 6 * np.pi, out, "fig2_perturbed")
        res.update(anchor=x.tolist(), singular_mults=z0.mult.tolist(), perturbed_mults=z1.mult.tolist())
    elif fig == 3:
        nu = gapdist.nu_one(R, o["count"], SeededStream(seed))
        grid = np.linspace(0, zeroline.max_gap_bound(R.degree, [1, 1]), 400)
        cols = {"nu_one": nu.cdf(grid)}
        edges, mass = nu.histogram(60)
        write_csv(os.path.join(out, "fig3_nu_hist.csv"), ["bin_left", "bin_right", "mass"],
                  zip(edges[:-1], edges[1:], mass))
        ks = {}
        for m in (1, 2, 3):
            eps = np.sqrt(2) * 10.0 ** -m
            ellm = np.array([1 + eps, 1.0])
            period = TWO_PI / eps
            need = o["gaps"] * TWO_PI / float(np.dot(R.degree, ellm))
            L = period * np.ceil(need / period)
            g = gapdist.empirical_gaps(zeroline.find_zeros(R, ellm, 0.0, L), R.degree)
            cols[f"rho_m{m}"] = g.cdf(grid)
            ks[m] = gapdist.ks_distance(g, nu)
        write_csv(os.path.join(out, "fig3_cdf.csv"), ["x"] + list(cols),
                  zip(grid, *cols.values()))
        res["ks"] = ks
    elif fig == 4:
        write_csv(os.path.join(out, "fig4_layers.csv"), ["layer", "y", "theta", "x1", "x2"],
                  _torus_curve(R))
    elif fig == 5:
        rng = SeededStream(seed)
        pois = gapdist.nu_one(polycore.product_binomial((1,) * 5), o["count"], rng.spawn(1))
        ref = gapdist.poisson_reference(5, o["count"], rng.spawn(2))
        U = haar_unitary(5, rng.spawn(3))
        det = gapdist.nu_one(polycore.determinantal(U), o["count"], rng.spawn(4))
        cue, _ = gapdist.cue_reference(5, o["count"], rng.spawn(5))
        grid = np.linspace(0, TWO_PI, 400)
        write_csv(os.path.join(out, "fig5_cdf.csv"), ["x", "nu_product", "poisson", "nu_det", "cue"],
                  zip(grid, pois.cdf(grid), ref.cdf(grid), det.cdf(grid), cue.cdf(grid)))
        for name, g in (("product", pois), ("det", det)):
            edges, mass = g.histogram(60, range=(0, TWO_PI))
            write_csv(os.path.join(out, f"fig5_{name}_hist.csv"), ["bin_left", "bin_right", "mass"],
                      zip(edges[:-1], edges[1:], mass))
        res["ks_product_vs_poisson"] = gapdist.ks_distance(pois, ref)
        res["ks_det_vs_cue"] = gapdist.ks_distance(det, cue)
    else:
        raise ConfigError("--figure must be 1..5")
    return res


COMMANDS = {
    "verify": cmd_verify, "zeros": cmd_zeros, "gaps": cmd_gaps, "nu1": cmd_nu1, "nuq": cmd_nuq,
    "perturb": cmd_perturb, "ergodic": cmd_ergodic, "compare": cmd_compare, "demo": cmd_demo,
}


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lyfq", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(sp, poly=True):
        if poly:
            sp.add_argument("--poly", required=True, help="JSON file or builtin (running, binomial:1,1, ...)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--echo", metavar="PATH", help="also write the resolved config here")

    def dist_out(sp):
        sp.add_argument("--samples", help="CSV gap,weight")
        sp.add_argument("--hist", help="CSV bin_left,bin_right,mass")
        sp.add_argument("--cdf", help="CSV x,cdf")
        sp.add_argument("--atoms", help="CSV location,mass")
        sp.add_argument("--bins", type=int, default=60)
        sp.add_argument("--atom-window", type=float, default=None)
        sp.add_argument("--atom-threshold", type=float, default=gapdist.ATOM_THRESHOLD)

    sp = sub.add_parser("verify", help="Lee-Yang sampling battery")
    common(sp)
    sp.add_argument("--trials", type=int, default=lycheck.DEFAULT_TRIALS)
    sp.add_argument("--K", type=int, default=lycheck.DEFAULT_K)
    sp.add_argument("--degree-cap", type=int, default=lycheck.DEFAULT_DEGREE_CAP)
    sp.add_argument("--circle-tol", type=float, default=1e-8)

    for name, hlp in (("zeros", "zeros on a line segment"), ("gaps", "empirical gap distribution")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--ell", required=True, help='direction, e.g. "5pi/22,1"')
        sp.add_argument("--from", dest="from", type=float, default=0.0)
        sp.add_argument("--to", type=float, required=True)
        sp.add_argument("--x0", help="line offset on the torus")
        if name == "zeros":
            sp.add_argument("--out", help="CSV x,mult")
            sp.add_argument("--windows", type=_floats, default=[5.0, 20.0, 100.0])
            sp.add_argument("--cross-validate", action="store_true")
        else:
            dist_out(sp)

    sp = sub.add_parser("nu1", help="Monte Carlo gap measure along the diagonal")
    common(sp)
    sp.add_argument("--count", type=int, default=10_000)
    dist_out(sp)

    sp = sub.add_parser("nuq", help="gap measure for a rational direction k/m")
    common(sp)
    sp.add_argument("--k", required=True, help="comma-separated positive integers")
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--count", type=int, default=10_000)
    dist_out(sp)

    sp = sub.add_parser("perturb", help="apply the regularizing operator")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--steps", type=int, default=None, help="default: total degree")
    sp.add_argument("--anchor", help="anchor angles; default: best of 64 seeded probes")
    sp.add_argument("--out", help="output polynomial JSON")

    sp = sub.add_parser("ergodic", help="orbit versus space average of a box indicator")
    common(sp)
    sp.add_argument("--ell", required=True)
    sp.add_argument("--box", default="0:pi", help='per-coordinate "lo:hi" list')
    sp.add_argument("--N", type=int, default=10_000)
    sp.add_argument("--count", type=int, default=10_000)
    sp.add_argument("--x0")

    sp = sub.add_parser("compare", help="KS and W1 between two distribution CSV files")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--echo", metavar="PATH")

    sp = sub.add_parser("demo", help="regenerate figure data (1..5) at desk scale")
    sp.add_argument("--figure", type=int, required=True, choices=range(1, 6))
    sp.add_argument("--outdir", default="demo_out")
    sp.add_argument("--count", type=int, default=10_000)
    sp.add_argument("--gaps", type=int, default=10_000, help="minimum gaps per empirical run")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--echo", metavar="PATH")

    sp = sub.add_parser("replay", help="rerun an echoed config")
    sp.add_argument("config")
    return ap


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute ``config``; returns ``(exit_code, document)``."""
    doc = {"config": asdict(config)}
    try:
        fn = COMMANDS.get(config.subcommand)
        if fn is None:
            raise ConfigError(f"unknown subcommand {config.subcommand!r}")
        doc["result"] = fn(dict(config.options))
        return EXIT_OK, doc
    except VerificationFailed as exc:
        doc.update(error=str(exc), result=exc.payload)
        return EXIT_VERIFY, doc
    except (ConfigError, OSError, KeyError) as exc:
        doc["error"] = f"config: {exc}"
        return EXIT_CONFIG, doc
    except (zeroline.AmbiguousLift, zeroline.ZeroResidualError, RootFindingError,
            OffCircleRoot, nuij.AnchorOnZeroSet, nuij.NotSelfInversive,
            ArithmeticError, np.linalg.LinAlgError) as exc:
        doc["error"] = f"numerical: {type(exc).__name__}: {exc}"
        return EXIT_NUMERIC, doc
    except ValueError as exc:
        doc["error"] = f"config: {exc}"
        return EXIT_CONFIG, doc


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.subcommand == "replay":
        try:
            with open(args.config) as fh:
                config = RunConfig.from_json(fh.read())
        except (OSError, ValueError) as exc:
            print(json.dumps({"error": f"config: {exc}"}))
            return EXIT_CONFIG
    else:
        opts = {k: v for k, v in vars(args).items() if k not in ("subcommand", "echo")}
        config = RunConfig(args.subcommand, opts)
    code, doc = run(config)
    echo = getattr(args, "echo", None)
    if echo:
        with open(echo, "w") as fh:
            fh.write(config.to_json())
    json.dump(doc, sys.stdout, indent=2, default=_jsonable)
    sys.stdout.write("\n")
    if "error" in doc:
        print(doc["error"], file=sys.stderr)
    return code


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


if __name__ == "__main__":
    sys.exit(main())
