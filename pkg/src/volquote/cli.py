"""Command line front end: ``volquote {price,surface,path,mpr,validate,bench}``.

Exit codes: 0 on success, 2 on invalid input, 1 on numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .claims import RiskAversion, VolClaim, parse_claim
from .errors import NumericalError, ParameterError
from .model import REFERENCE_PARAMS, PARAM_KEYS, ModelParams, VolState
from .pricer import DEFAULT_POINTS, build_densities, market_price_of_risk, quote, surface

RUN_KEYS = ("gamma", "y0", "T", "claim", "grid", "n_fft", "seed", "out", "format", "dt", "s0")
DEFAULTS = {"gamma": "1", "y0": "0.15", "T": "1", "claim": "put:K=0.15", "seed": "20240101",
            "format": "csv", "dt": str(1.0 / 250), "s0": "1"}
DEFAULT_GRID = "y0=0.01:0.5:50;T=0.1:1:10;gamma=1"


@dataclass
class RunConfig:
    params: ModelParams
    claim: str
    gamma: float
    y0: float
    T: float
    grid: str | None
    n_fft: int | None
    seed: int
    out: str | None
    format: str
    dt: float
    s0: float
    extra: dict = field(default_factory=dict)

    @property
    def grid_kw(self) -> dict:
        return {"n_points": self.n_fft} if self.n_fft else {}

    def parsed_claim(self) -> VolClaim | None:
        return None if self.claim.strip().lower() == "none" else parse_claim(self.claim)


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment; unknown keys rejected."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParameterError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in PARAM_KEYS and key not in RUN_KEYS:
            raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _num(name: str, text: str, kind=float):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise ParameterError(f"--{name.replace('_', '-')} expects a number, got {text!r}") from None


def build_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags (flags win) and validate everything."""
    merged = dict(DEFAULTS)
    merged.update({k: str(v) for k, v in REFERENCE_PARAMS.as_dict().items()})
    if ns.config:
        merged.update(read_config_file(ns.config))
    for key in PARAM_KEYS + RUN_KEYS:
        val = getattr(ns, key, None)
        if val is not None:
            merged[key] = str(val)
    params = ModelParams(**{k: _num(k, merged[k]) for k in PARAM_KEYS})
    fmt = merged["format"].lower()
    if fmt not in ("csv", "json"):
        raise ParameterError(f"--format must be csv or json, got {fmt!r}")
    n_fft = _num("n_fft", merged["n_fft"], int) if merged.get("n_fft") else None
    if n_fft is not None and (n_fft < 16 or n_fft & (n_fft - 1)):
        raise ParameterError(f"--n-fft must be a power of two >= 16, got {n_fft}")
    cfg = RunConfig(
        params=params, claim=merged["claim"], gamma=_num("gamma", merged["gamma"]),
        y0=_num("y0", merged["y0"]), T=_num("T", merged["T"]), grid=merged.get("grid"),
        n_fft=n_fft, seed=_num("seed", merged["seed"], int), out=merged.get("out"),
        format=fmt, dt=_num("dt", merged["dt"]), s0=_num("s0", merged["s0"]),
    )
    if not cfg.gamma > 0:
        raise ParameterError(f"--gamma must be positive, got {cfg.gamma}")
    if not cfg.y0 > 0:
        raise ParameterError(f"--y0 must be positive, got {cfg.y0}")
    if not cfg.T >= 0:
        raise ParameterError(f"--T must be non-negative, got {cfg.T}")
    cfg.parsed_claim()
    return cfg


def _axis(name: str, text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError(f"grid axis {name} must be lo:hi:n, got {text!r}")
        lo, hi, n = _num(name, parts[0]), _num(name, parts[1]), _num(name, parts[2], int)
        if n < 1 or (n > 1 and hi < lo):
            raise ParameterError(f"grid axis {name}: need n >= 1 and lo <= hi")
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [_num(name, v) for v in text.split(",") if v.strip()]


def parse_grid(text: str) -> dict[str, list[float]]:
    """``y0=lo:hi:n;T=lo:hi:m;gamma=g1,g2`` (each axis also accepts a list)."""
    axes = {}
    for part in filter(None, (s.strip() for s in text.split(";"))):
        if "=" not in part:
            raise ParameterError(f"bad grid axis {part!r}; expected name=values")
        name, body = (s.strip() for s in part.split("=", 1))
        if name not in ("y0", "T", "gamma"):
            raise ParameterError(f"unknown grid axis {name!r}; use y0, T, gamma")
        axes[name] = _axis(name, body)
    missing = {"y0", "T", "gamma"} - set(axes)
    if missing:
        raise ParameterError(f"grid is missing axes: {', '.join(sorted(missing))}")
    if min(axes["y0"]) <= 0:
        raise ParameterError("grid y0 values must be positive")
    if min(axes["gamma"]) <= 0:
        raise ParameterError("grid gamma values must be positive")
    return axes


@contextlib.contextmanager
def _sink(path: str | None):
    if path in (None, "", "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit(cfg: RunConfig, records: list[dict], comment: str | None = None, columns=None):
    with _sink(cfg.out) as fh:
        if cfg.format == "json":
            io.write_json(records, fh)
        else:
            io.write_csv(records, fh, columns=columns, comment=comment)


# -- subcommands ---------------------------------------------------------------


def cmd_price(cfg: RunConfig, ns) -> int:
    claim = cfg.parsed_claim()
    if claim is None:
        raise ParameterError("price needs a claim")
    state = VolState.make(cfg.params, cfg.y0, cfg.T, s=cfg.s0)
    q = quote(claim, cfg.gamma, state, cfg.params, **cfg.grid_kw)
    _emit(cfg, [io.quote_record(cfg.y0, cfg.T, cfg.gamma, q)], comment=f"claim={claim.spec()}")
    return 0


def cmd_surface(cfg: RunConfig, ns) -> int:
    claim = cfg.parsed_claim()
    if claim is None:
        raise ParameterError("surface needs a claim")
    axes = parse_grid(cfg.grid or DEFAULT_GRID)
    rows = surface(claim, axes["y0"], axes["T"], axes["gamma"], cfg.params, s=cfg.s0,
                   workers=ns.workers, **cfg.grid_kw)
    _emit(cfg, io.surface_records(rows), comment=f"claim={claim.spec()}")
    return 0


def cmd_path(cfg: RunConfig, ns) -> int:
    from .pathsim import LEDGER_COLUMNS, generate_ledger

    claim = cfg.parsed_claim()
    if claim is None:
        raise ParameterError("path needs a claim")
    led = generate_ledger(cfg.params, claim, cfg.gamma, cfg.y0, T=cfg.T, dt=cfg.dt, s0=cfg.s0,
                          seed=cfg.seed, **cfg.grid_kw)
    records = [dict(zip(LEDGER_COLUMNS, (getattr(r, c) for c in LEDGER_COLUMNS)))
               for r in led.rows]
    _emit(cfg, records, columns=LEDGER_COLUMNS,
          comment=f"claim={led.claim} gamma={led.gamma:g} seed={led.seed} dt={led.dt:g}")
    return 0


def cmd_mpr(cfg: RunConfig, ns) -> int:
    claim = cfg.parsed_claim()
    axes = parse_grid(cfg.grid or f"y0=0.01:0.5:50;T={cfg.T!r};gamma={cfg.gamma!r}")
    records = []
    for T in axes["T"]:
        for y0 in axes["y0"]:
            state = VolState.make(cfg.params, y0, T)
            dp = None
            if claim is not None and state.tau > 0:
                dp = build_densities(cfg.params, state, **cfg.grid_kw)
            for g in axes["gamma"]:
                ra = RiskAversion.for_model(g, cfg.params)
                m = market_price_of_risk(ra, claim, state, cfg.params, dp)
                records.append({"y0": y0, "T": T, "gamma": g, "lambda1": m.lambda1,
                                "lambda2": m.lambda2, "lambda2_closed": m.lambda2_closed,
                                "gap": m.gap})
    _emit(cfg, records, comment=f"claim={claim.spec() if claim else 'none'}")
    return 0


def cmd_validate(cfg: RunConfig, ns) -> int:
    from .oracle.agreement import reference_point, three_way

    if ns.point == "paper":
        claim, T, y0, gamma, p = reference_point()
    else:
        claim, T, y0, gamma, p = cfg.parsed_claim(), cfg.T, cfg.y0, cfg.gamma, cfg.params
        if claim is None:
            raise ParameterError("validate needs a claim")
    if not T > 0:
        raise ParameterError("validate needs T > 0")
    rep = three_way(claim, gamma, y0, T, p, n_paths=ns.paths, n_steps=ns.steps, seed=cfg.seed,
                    **cfg.grid_kw)
    out = rep.as_dict()
    out["point"]["name"] = ns.point
    with _sink(cfg.out) as fh:
        io.write_json(out, fh)
    return 0 if rep.passed else 1


def bench(n_quotes: int, p: ModelParams = REFERENCE_PARAMS, n_points: int = DEFAULT_POINTS,
          seed: int = 0, claim: VolClaim | None = None) -> dict:
    """Quotes per second over random ``(y0, T)`` in ``[0.05, 0.5] x [0.1, 1]``."""
    if n_quotes < 1:
        raise ParameterError("bench needs at least one quote")
    claim = claim or parse_claim("put:K=0.15")
    rng = np.random.default_rng(seed)
    y0s = rng.uniform(0.05, 0.5, n_quotes)
    Ts = rng.uniform(0.1, 1.0, n_quotes)
    start = time.perf_counter()
    for y0, T in zip(y0s, Ts):
        quote(claim, 1.0, VolState.make(p, y0, T), p, n_points=n_points)
    elapsed = time.perf_counter() - start
    return {"n_quotes": n_quotes, "n_points": n_points, "seconds": elapsed,
            "quotes_per_sec": n_quotes / elapsed}


def cmd_bench(cfg: RunConfig, ns) -> int:
    if ns.n < 100:
        raise ParameterError("bench needs n >= 100")
    rep = bench(ns.n, cfg.params, cfg.n_fft or DEFAULT_POINTS, cfg.seed, cfg.parsed_claim())
    _emit(cfg, [rep])
    return 0


# -- argument parsing ----------------------------------------------------------


def _common(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("model")
    for key in PARAM_KEYS:
        g.add_argument(f"--{key}", type=str, default=None,
                       help=f"model parameter {key} (default {REFERENCE_PARAMS.as_dict()[key]:g})")
    r = sp.add_argument_group("run")
    r.add_argument("--gamma", type=str, help="risk aversion (default 1)")
    r.add_argument("--y0", type=str, help="initial squared volatility (default 0.15)")
    r.add_argument("--T", type=str, help="maturity in years (default 1)")
    r.add_argument("--claim", type=str,
                   help="put:K=.., spread:K1=..,K2=.., const:k=.., table:file.csv, zero "
                        "(default put:K=0.15)")
    r.add_argument("--grid", type=str, help=f"surface grid (default {DEFAULT_GRID!r})")
    r.add_argument("--n-fft", dest="n_fft", type=str, help="Fourier lattice size (power of two)")
    r.add_argument("--seed", type=str, help="random seed")
    r.add_argument("--out", type=str, help="output file (default stdout)")
    r.add_argument("--format", type=str, help="csv or json (default csv)")
    r.add_argument("--dt", type=str, help="ledger time step (path only)")
    r.add_argument("--s0", type=str, help="stock price (default 1)")
    r.add_argument("--config", type=str, help="flat key=value file; flags override it")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="volquote", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "price": "single indifference quote",
        "surface": "quote table over y0 x T x gamma",
        "path": "hedging ledger along one simulated path",
        "mpr": "market price of risk curves",
        "validate": "transform / Monte Carlo / PDE agreement report (JSON)",
        "bench": "throughput in quotes per second",
    }
    subs = {}
    for name, text in helps.items():
        subs[name] = sub.add_parser(name, help=text, description=text)
        _common(subs[name])
    subs["surface"].add_argument("--workers", type=int, default=1, help="worker processes")
    subs["validate"].add_argument("--point", choices=("paper", "custom"), default="paper",
                                  help="reference point or the point given by the flags")
    subs["validate"].add_argument("--paths", type=int, default=1_000_000)
    subs["validate"].add_argument("--steps", type=int, default=256)
    subs["bench"].add_argument("--n", type=int, default=1000, help="number of quotes")
    return ap


COMMANDS = {"price": cmd_price, "surface": cmd_surface, "path": cmd_path, "mpr": cmd_mpr,
            "validate": cmd_validate, "bench": cmd_bench}


def run(argv=None) -> int:
    ap = make_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = build_config(ns)
        return COMMANDS[ns.command](cfg, ns)
    except (ParameterError, ValueError) as exc:
        print(f"volquote: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"volquote: numerical failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
