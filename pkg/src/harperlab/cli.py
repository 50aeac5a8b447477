"""Command-line front end: ``harperlab <subcommand> ...``.

Stdout carries raw data only (CSV or JSON lines).  With ``--out DIR`` the
same data is also written under DIR/{bands,tables,plots,reports}/ with the
full run configuration in a header line.  Exit codes: 0 success, 1
computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cache import BandCache, cache_dir, cache_key
from .contfrac import CFExpansion, NAMED, convergents
from .errors import HarperlabError
from .model import parse_model
from .spectral import ButterflyEntry, farey_fractions, ids as ids_fn, union_spectra, union_spectrum

log = logging.getLogger("harperlab")

ENV_PREFIX = "HARPERLAB_"
DEFAULTS = {"tol": 1e-9, "seed": 0, "workers": 1, "cache_dir": ".harperlab-cache"}


@dataclass
class RunConfig:
    """Resolved settings; precedence is flags > HARPERLAB_* environment > defaults."""

    command: str
    model: str | None = None
    alpha: str | None = None
    tol: float = DEFAULTS["tol"]
    out: str | None = None
    cache_dir: str = DEFAULTS["cache_dir"]
    use_cache: bool = True
    seed: int = DEFAULTS["seed"]
    workers: int = DEFAULTS["workers"]
    reproducible: bool = False
    params: dict = field(default_factory=dict)
    version: str = __version__

    @classmethod
    def resolve(cls, args: argparse.Namespace, env=None) -> "RunConfig":
        env = os.environ if env is None else env

        def pick(name, cast):
            flag = getattr(args, name, None)
            if flag is not None:
                return cast(flag)
            key = ENV_PREFIX + name.upper()
            if key in env:
                try:
                    return cast(env[key])
                except ValueError as exc:
                    raise UsageError(f"environment variable {key}={env[key]!r}: {exc}") from exc
            return DEFAULTS[name]

        common = {"command", "model", "alpha", "frac", "tol", "out", "cache_dir", "no_cache", "seed", "workers",
                  "reproducible", "verbose", "func"}
        params = {k: v for k, v in vars(args).items() if k not in common and v is not None}
        alpha = getattr(args, "alpha", None) or getattr(args, "frac", None)
        return cls(
            command=args.command,
            model=getattr(args, "model", None),
            alpha=None if alpha is None else str(alpha),
            tol=pick("tol", float),
            out=getattr(args, "out", None),
            cache_dir=str(cache_dir(getattr(args, "cache_dir", None) or env.get("HARPERLAB_CACHE_DIR"))),
            use_cache=not getattr(args, "no_cache", False),
            seed=pick("seed", int),
            workers=pick("workers", int),
            reproducible=bool(getattr(args, "reproducible", False)),
            params={k: (str(v) if isinstance(v, Fraction) else v) for k, v in sorted(params.items())},
        )

    def header_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def spectrum_fn(self):
        if self.use_cache:
            return BandCache(Path(self.cache_dir)).union_spectrum
        return lambda fam, frac, tol: union_spectrum(fam, frac, tol)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types


def frac_arg(text: str) -> Fraction:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}")
    if not 0 <= f <= 1:
        raise argparse.ArgumentTypeError(f"fraction {text} outside [0, 1]")
    return f


def alpha_arg(text: str):
    if text in NAMED:
        return text
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"alpha must be golden, silver or a decimal in (0,1): {text!r}")
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError(f"alpha {text} outside (0, 1)")
    return text


def tgrid_arg(text: str) -> list[float]:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:step")
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("bad t grid")
    n = int(round((b - a) / step))
    return [round(a + i * step, 10) for i in range(n + 1)]


def _expansion(alpha: str, precision: int | None = None) -> CFExpansion:
    if alpha in NAMED:
        return NAMED[alpha]
    return CFExpansion.from_real(alpha, precision)


def _alpha_value(alpha: str):
    """Fraction for rational input, float for named irrationals (used by the Lyapunov code)."""
    if alpha in NAMED:
        return NAMED[alpha].value()
    return Fraction(alpha)


# ---------------------------------------------------------------------------
# output helpers


class Emitter:
    def __init__(self, cfg: RunConfig, stdout):
        self.cfg = cfg
        self.stdout = stdout

    def _file(self, sub: str, name: str) -> Path | None:
        if not self.cfg.out:
            return None
        d = Path(self.cfg.out) / sub
        d.mkdir(parents=True, exist_ok=True)
        return d / name

    def csv(self, name: str, header: list[str], rows, sub: str = "tables"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
        text = buf.getvalue()
        self.stdout.write(text)
        path = self._file(sub, name)
        if path:
            path.write_text(f"# {self.cfg.header_json()}\n" + text)

    def jsonl(self, name: str, records, sub: str = "bands"):
        lines = [json.dumps(r) for r in records]
        text = "".join(line + "\n" for line in lines)
        self.stdout.write(text)
        path = self._file(sub, name)
        if path:
            path.write_text(json.dumps({"config": json.loads(self.cfg.header_json())}) + "\n" + text)

    def report(self, name: str, doc: dict):
        path = self._file("reports", name)
        if path:
            path.write_text(json.dumps({"config": json.loads(self.cfg.header_json()), **doc}, indent=2,
                                       sort_keys=True) + "\n")

    def svg(self, name: str, text: str):
        path = self._file("plots", name)
        if path:
            path.write_text(text)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    return x


def _note(msg: str):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_cf(cfg, args, out: Emitter):
    cf = _expansion(args.alpha, args.precision)
    rows = [(c.n, c.a, c.p, c.q, "" if c.omega is None else str(c.omega)) for c in convergents(cf, args.depth)]
    out.csv("cf.csv", ["n", "a_n", "p_n", "q_n", "omega_n"], rows)


def cmd_spectrum(cfg, args, out: Emitter):
    fam = parse_model(args.model, alpha=args.frac)
    if args.method != "auto":
        bs = union_spectrum(fam, args.frac, cfg.tol, method=args.method)
    else:
        bs = cfg.spectrum_fn()(fam, args.frac, cfg.tol)
    stem = f"spectrum_{args.frac.numerator}_{args.frac.denominator}.jsonl"
    out.jsonl(stem, bs.to_list())


def cmd_butterfly(cfg, args, out: Emitter):
    fam = parse_model(args.model)
    fracs = farey_fractions(args.qmax)
    entries = _cached_batch(cfg, fam, fracs)
    records = []
    for e in entries:
        if e.bands is None:
            records.append({"p": e.frac.numerator, "q": e.frac.denominator, "error": e.error})
            continue
        for lo, hi in e.bands:
            records.append({"p": e.frac.numerator, "q": e.frac.denominator, "lo": lo, "hi": hi})
    out.jsonl("butterfly.jsonl", records)
    if args.svg:
        from .svg import butterfly_svg

        rows = [(float(e.frac), list(e.bands)) for e in entries if e.bands is not None]
        out.svg("butterfly.svg", butterfly_svg(rows, f"{fam.name}, q <= {args.qmax}", cfg.reproducible,
                                               cfg.header_json()))
    failed = [e for e in entries if e.bands is None]
    if failed:
        _note(f"{len(failed)} fractions flagged (budget exceeded)")


def _cached_batch(cfg: RunConfig, fam, fracs) -> list[ButterflyEntry]:
    """Union spectra for many fractions: cache hits first, misses on the worker pool."""
    if not cfg.use_cache:
        return union_spectra(fam, fracs, cfg.tol, workers=cfg.workers)
    cache = BandCache(Path(cfg.cache_dir))
    model = fam.cache_key()
    keys = {f: cache_key(model, f.numerator, f.denominator, cfg.tol) for f in fracs}
    missing = [f for f in fracs if cache.get(keys[f]) is None]
    errors = {}
    for e in union_spectra(fam, missing, cfg.tol, workers=cfg.workers):
        if e.bands is None:
            errors[e.frac] = e.error
        else:
            cache.put(keys[e.frac], e.bands, {"model": model, "lambda": fam.lam, "p": e.frac.numerator,
                                              "q": e.frac.denominator, "tol": cfg.tol})
    return [ButterflyEntry(f, None, errors[f]) if f in errors else ButterflyEntry(f, cache.get(keys[f]))
            for f in fracs]


def cmd_ids(cfg, args, out: Emitter):
    fam = parse_model(args.model, alpha=args.frac)
    bs = cfg.spectrum_fn()(fam, args.frac, cfg.tol)
    pad = 0.05 * (bs.hi - bs.lo) + 1e-3
    grid = np.linspace(bs.lo - pad, bs.hi + pad, args.grid)
    sample = ids_fn(fam, args.frac, grid, args.thetas, args.kpoints)
    out.csv(f"ids_{args.frac.numerator}_{args.frac.denominator}.csv", ["E", "N"],
            zip(grid.tolist(), sample.values.tolist()))


def cmd_lyapunov(cfg, args, out: Emitter):
    from .dynamics import lyapunov_curve

    alpha = _alpha_value(args.alpha)
    fam = parse_model(args.model, alpha=alpha)
    energies = [float(e) for chunk in args.energy for e in chunk.split(",") if e]
    if args.steps < 100 or args.thetas < 10:
        raise UsageError("--steps must be >= 100 and --thetas >= 10")
    est = lyapunov_curve(fam, alpha, energies, args.steps, args.thetas, cfg.seed)
    out.csv("lyapunov.csv", ["E", "L", "stderr", "n"], [(e.E, e.L, e.stderr, e.n) for e in est])


def cmd_gauge_verify(cfg, args, out: Emitter):
    from .gauge import SYMBOLIC, verify_all

    alphas = [SYMBOLIC if a == "symbolic" else Fraction(a) for a in args.alpha.split(",")]
    summary = verify_all(args.krange, args.mrange, alphas)
    out.csv("gauge.csv", ["relation", "status", "passed", "failed", "skipped"], summary.rows())
    for r in summary.reports:
        for alpha, st, lhs, rhs in r.failures[:1]:
            _note(f"{r.name} fails at alpha={alpha}, state=(k={st.k}, m={st.m}): {lhs} != {rhs}")
    if not summary.ok:
        return 1


def cmd_chiral_check(cfg, args, out: Emitter):
    from .gauge import isospectral_check

    rep = isospectral_check(args.frac, cfg.tol)
    out.csv("chiral_check.csv", ["frac", "doubled", "hausdorff_distance", "tol", "ok"],
            [(str(rep.frac), str(rep.doubled), rep.distance, rep.tol, rep.ok)])
    if not rep.ok:
        return 1


def cmd_scaling(cfg, args, out: Emitter):
    from .fractal import THOULESS_C, thouless_scaling_table

    tab = thouless_scaling_table(args.alpha, args.nmax, cfg.tol, spectrum=cfg.spectrum_fn())
    out.csv("scaling.csv", ["n", "p", "q", "measure", "q_measure"],
            [(r.n, r.p, r.q, r.measure, r.q_measure) for r in tab.rows])
    out.report("scaling.json", {"reference": THOULESS_C, "trend": "trend",
                                "trend_toward_reference": tab.trend_toward_reference() if len(tab.rows) >= 6 else None})
    if args.svg:
        from .svg import loglog_svg

        qs = [r.q for r in tab.rows]
        out.svg("scaling.svg", loglog_svg({"measure": (qs, [r.measure for r in tab.rows]),
                                           "c/q": (qs, [THOULESS_C / q for q in qs])},
                                          "measure vs q", "q", "measure", cfg.reproducible, cfg.header_json()))


def cmd_dimension(cfg, args, out: Emitter):
    from .fractal import dim_upper_estimate
    from .model import amo

    convs = convergents(_expansion(args.alpha), args.nmax)
    q_list = [c.q for c in convs if c.q >= 2]
    est = dim_upper_estimate(amo(1.0), _expansion(args.alpha), q_list, args.tgrid, args.C,
                             q_max=q_list[-1], tol=cfg.tol, spectrum=cfg.spectrum_fn())
    header = ["q", "delta", "count", "box_count"] + [f"sum_t{t:g}" for t in est.t_grid]
    rows = [[q, cv.delta, cv.count, bc] + est.sums[i].tolist()
            for i, (q, cv, bc) in enumerate(zip(est.q_list, est.covers, est.box_counts))]
    out.csv("dimension.csv", header, rows)
    _note(f"t* = {est.t_star}, box slope = {est.box_slope:.4f}")
    out.report("dimension.json", {"t_star": est.t_star, "box_slope": est.box_slope, "C": args.C})
    if args.svg:
        from .svg import loglog_svg

        series = {f"t={t:g}": (est.q_list, est.sums[:, j].tolist()) for j, t in enumerate(est.t_grid)}
        out.svg("dimension.svg", loglog_svg(series, "cover sums", "q", "sum |w|^t", cfg.reproducible,
                                            cfg.header_json()))


def cmd_continuity(cfg, args, out: Emitter):
    from .fractal import continuity_fit

    # the union over theta ignores the phase offset, so shifted-chiral is plain chiral here
    fam = parse_model("chiral" if args.model == "shifted-chiral" else args.model)
    fit = continuity_fit(fam, _expansion(args.alpha), range(args.jmin, args.jmax + 1), cfg.tol,
                         spectrum=cfg.spectrum_fn())
    out.csv("continuity.csv", ["j", "q_j", "q_j1", "alpha_gap", "deviation"], fit.rows)
    _note(fit.note)
    out.report("continuity.json", {"gamma": fit.gamma, "K": fit.K, "note": fit.note, "trend": "trend"})
    if args.svg:
        from .svg import loglog_svg

        xs = [r[3] for r in fit.rows]
        out.svg("continuity.svg", loglog_svg({"d_j": (xs, [r[4] for r in fit.rows])}, "continuity",
                                             "|alpha_j - alpha_j+1|", "d_j", cfg.reproducible, cfg.header_json()))


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: usage error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="harperlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=False, tol=True):
        if model:
            sp.add_argument("--model", default="amo:1", help="amo[:lam] | chiral | shifted-chiral | free | custom:FILE")
        if tol:
            sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", default=None, help="directory for bands/ tables/ plots/ reports/")
        sp.add_argument("--cache-dir", default=None)
        sp.add_argument("--no-cache", action="store_true")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--reproducible", action="store_true", help="omit timestamps from plots")
        sp.add_argument("--svg", action="store_true", help="also write an SVG plot under --out")
        sp.add_argument("-v", "--verbose", action="store_true")

    s = sub.add_parser("cf", help="continued fraction and convergents")
    s.add_argument("--alpha", type=alpha_arg, required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--precision", type=int, default=None, help="decimal digits trusted in --alpha")
    common(s, tol=False)
    s.set_defaults(func=cmd_cf)

    s = sub.add_parser("spectrum", help="union spectrum at a rational frequency (JSON lines)")
    common(s, model=True)
    s.add_argument("--frac", type=frac_arg, required=True)
    s.add_argument("--method", choices=["auto", "exact", "sweep"], default="auto")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("butterfly", help="union spectra for all p/q with q <= qmax")
    common(s, model=True)
    s.add_argument("--qmax", type=int, required=True)
    s.set_defaults(func=cmd_butterfly)

    s = sub.add_parser("ids", help="integrated density of states")
    common(s, model=True)
    s.add_argument("--frac", type=frac_arg, required=True)
    s.add_argument("--grid", type=int, default=200)
    s.add_argument("--thetas", type=int, default=64)
    s.add_argument("--kpoints", type=int, default=128)
    s.set_defaults(func=cmd_ids)

    s = sub.add_parser("lyapunov", help="Monte-Carlo Lyapunov exponent")
    common(s, model=True, tol=False)
    s.add_argument("--alpha", type=alpha_arg, required=True)
    s.add_argument("--energy", action="append", required=True, help="energy or comma list; repeatable")
    s.add_argument("--steps", type=int, default=10_000)
    s.add_argument("--thetas", type=int, default=32)
    s.set_defaults(func=cmd_lyapunov)

    s = sub.add_parser("gauge-verify", help="exact check of the chiral gauge relations")
    s.add_argument("--krange", type=int, default=20)
    s.add_argument("--mrange", type=int, default=20)
    s.add_argument("--alpha", default="symbolic", help="symbolic, p/q, or a comma list of these")
    common(s, tol=False)
    s.set_defaults(func=cmd_gauge_verify)

    s = sub.add_parser("chiral-check", help="Hausdorff distance between AMO at 2p/q and chiral at p/q")
    common(s)
    s.add_argument("--frac", type=frac_arg, required=True)
    s.set_defaults(func=cmd_chiral_check)

    s = sub.add_parser("scaling", help="q |sigma| along convergents")
    common(s)
    s.add_argument("--alpha", type=alpha_arg, default="golden")
    s.add_argument("--nmax", type=int, default=15)
    s.set_defaults(func=cmd_scaling)

    s = sub.add_parser("dimension", help="cover sums and box-counting slope")
    common(s)
    s.add_argument("--alpha", type=alpha_arg, default="golden")
    s.add_argument("--nmax", type=int, default=15)
    s.add_argument("--C", type=float, default=2.0)
    s.add_argument("--tgrid", type=tgrid_arg, default=tgrid_arg("0.5:0.8:0.05"))
    s.set_defaults(func=cmd_dimension)

    s = sub.add_parser("continuity", help="fit of spectral deviation against frequency gap")
    common(s, model=True)
    s.add_argument("--alpha", type=alpha_arg, default="golden")
    s.add_argument("--jmin", type=int, default=6)
    s.add_argument("--jmax", type=int, default=12)
    s.set_defaults(func=cmd_continuity)
    return p


def main(argv=None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    stdout = stdout or sys.stdout
    try:
        cfg = RunConfig.resolve(args)
        if cfg.workers < 1:
            raise UsageError("--workers must be >= 1")
        if cfg.tol <= 0:
            raise UsageError("--tol must be positive")
        code = args.func(cfg, args, Emitter(cfg, stdout))
    except UsageError as exc:
        print(f"harperlab: usage error: {exc}", file=sys.stderr)
        return 2
    except (HarperlabError, ArithmeticError, ValueError) as exc:
        print(f"harperlab: error: {exc}", file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
