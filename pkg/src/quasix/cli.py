"""Experiment runner: deterministic CSV/JSON emission for every module.

Commands
--------
spectrum    full momentum-resolved spectrum of a small chain
filter      energy-filter pipeline fidelity versus truncation radius
dispersion  variational excitation bands of the valence-bond chain
converge    block-size convergence of the lowest band at fixed momenta
spectralfn  broadened spectral function and exact pole residues
lrcheck     commutator growth against the light-cone envelope

Every CSV starts with ``#``-prefixed metadata lines (command tag, full config,
derived constants) so a run is reproducible from its header; a JSON sidecar
additionally records versions and wall time.  Output bodies are deterministic
for a fixed config.  Exit codes: 0 ok, 1 configuration error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .lattice import Region
from .models import (LocalHamiltonian, SX, SY, SZ, S1X, S1Y, S1Z,
                     aklt_projector, build_model, lr_constants)
from .filterlab import FilterLab, QuadratureError, make_schedule, run_filter_pipeline
from .sector import RegionOperator, lr_commutator_check
from .spectral import dynamic_correlation
from .mps import ExcitationAnsatz, aklt_tensor, excitation_energies

__all__ = ["RunConfig", "main", "run"]

COMMANDS = ("spectrum", "filter", "dispersion", "converge", "spectralfn",
            "lrcheck")

_SINGLE_SITE_OPS = {
    2: {"sz": SZ, "sx": SX, "sy": SY},
    3: {"sz": S1Z, "sx": S1X, "sy": S1Y},
}


class ConfigError(Exception):
    """Invalid flag combination or value."""


@dataclass
class RunConfig:
    """Fully-resolved description of one run; serialised into every output."""

    command: str
    model: str = "tfim"
    params: dict = field(default_factory=dict)
    sites: int = 8
    momentum_index: int | None = None
    momentum: str | None = None
    op: str = "sz"
    alpha: int = 0
    lmax: int = 5
    pgrid: int = 64
    p_list: tuple[str, ...] = ()
    mu: float | None = None
    eta: float | None = None
    dist: int | None = None
    times: tuple[float, ...] = (0.1, 0.2, 0.4, 0.8)
    levels: int = 12
    seed: int = 0
    out: str = "run.csv"
    residues_out: str | None = None

    def resolved_momentum(self) -> int:
        """Momentum index, from --momentum-index or nearest grid point."""
        if self.momentum_index is not None:
            return self.momentum_index % self.sites
        if self.momentum is None:
            raise ConfigError("a momentum (--momentum or --momentum-index) is required")
        p = parse_momentum(self.momentum)
        return int(round(p * self.sites / (2.0 * math.pi))) % self.sites


def parse_momentum(text: str) -> float:
    """Parse '0.4pi', 'pi', or a plain radian value."""
    t = text.strip().lower()
    try:
        if t.endswith("pi"):
            head = t[:-2].rstrip("*")
            return (float(head) if head else 1.0) * math.pi
        return float(t)
    except ValueError as exc:
        raise ConfigError(f"cannot parse momentum {text!r}") from exc


def parse_params(items: list[str]) -> dict:
    """Parse repeated 'name=value' tokens (comma separation allowed)."""
    out: dict[str, float] = {}
    for item in items:
        for tok in item.split(","):
            if not tok:
                continue
            if "=" not in tok:
                raise ConfigError(f"malformed parameter {tok!r}; expected name=value")
            name, val = tok.split("=", 1)
            try:
                out[name.strip()] = float(val)
            except ValueError as exc:
                raise ConfigError(f"non-numeric parameter value {tok!r}") from exc
    return out


def parse_operator(spec: str, d: int, N: int) -> RegionOperator:
    """Build a region operator from 'sz', 'sx@3', or products 'sz@0*sz@1'."""
    ops = _SINGLE_SITE_OPS.get(d)
    if ops is None:
        raise ConfigError(f"no named operators for local dimension {d}")
    factors: dict[int, np.ndarray] = {}
    for tok in spec.lower().split("*"):
        name, _, site_s = tok.strip().partition("@")
        if name not in ops:
            raise ConfigError(f"unknown operator {name!r}; choose from {sorted(ops)}")
        site = int(site_s) if site_s else 0
        if site in factors:
            factors[site] = factors[site] @ ops[name]
        else:
            factors[site] = ops[name]
    sites = tuple(sorted(factors))
    mat = np.array([[1.0]])
    for site in sites:
        mat = np.kron(mat, factors[site])
    return RegionOperator(Region(sites, N), mat, spec)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if not np.isfinite(x):
        raise FloatingPointError(f"non-finite value {x!r} in output")
    return format(float(x), ".12g")


def write_csv(path: str, cfg: RunConfig, constants: dict,
              columns: list[str], rows: list[tuple]) -> None:
    cfg_dict = asdict(cfg)
    for key in ("out", "residues_out"):  # paths vary between identical runs
        cfg_dict.pop(key, None)
    cfg_json = json.dumps(cfg_dict, sort_keys=True, default=list)
    lines = [f"# command: {cfg.command}",
             f"# config: {cfg_json}",
             f"# constants: {json.dumps(constants, sort_keys=True)}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_meta(path: str, cfg: RunConfig, constants: dict,
               wall_time: float) -> None:
    meta = {
        "command": cfg.command,
        "config": asdict(cfg),
        "constants": constants,
        "versions": {"quasix": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "wall_time_s": round(wall_time, 3),
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=list)
        fh.write("\n")


def _meta_path(out: str) -> str:
    stem, ext = os.path.splitext(out)
    return stem + ".meta.json"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_spectrum(cfg: RunConfig):
    H = build_model(cfg.model, cfg.params, cfg.sites)
    if H.d ** H.N > 20000:
        raise ConfigError("spectrum requires a full diagonalisation; "
                          f"d^N = {H.d**H.N} exceeds 20000")
    lab = FilterLab(H)
    rows = []
    for k in range(H.N):
        eig = lab.sector_eigen(k)
        for alpha, e in enumerate(eig.energies):
            rows.append((k, eig.p, alpha, e))
    constants = {"E0": lab.E0, "gap": lab.gap, "d": H.d, "N": H.N}
    return constants, ["p_index", "p", "alpha", "energy"], rows


def _cmd_filter(cfg: RunConfig):
    H = build_model(cfg.model, cfg.params, cfg.sites)
    lab = FilterLab(H)
    k = cfg.resolved_momentum()
    eig = lab.sector_eigen(k)
    dE = eig.isolation_gap(cfg.alpha)
    O = parse_operator(cfg.op, H.d, H.N)
    rows = []
    constants = {}
    for ell in range(1, cfg.lmax + 1):
        sched = make_schedule(ell, dE, H, mu=cfg.mu)
        rep = run_filter_pipeline(lab, O, k, cfg.alpha, sched)
        constants = {"mu": sched.mu, "s": sched.s, "v_lr": sched.v_lr,
                     "dE": dE, "gap": lab.gap, "ell0": rep.ell0}
        rows.append((ell, rep.T, rep.q, rep.overlap, rep.norm, rep.seminorm,
                     rep.F, rep.bound, rep.f, rep.DX))
    return constants, ["ell", "T", "q", "overlap", "norm", "seminorm", "F",
                       "bound", "f", "DX"], rows


def _degeneracy_labels(e: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Multiplicity of the near-degenerate group each level belongs to."""
    out = np.zeros(len(e), dtype=int)
    i = 0
    while i < len(e):
        j = i
        while j + 1 < len(e) and e[j + 1] - e[j] < tol:
            j += 1
        out[i:j + 1] = j - i + 1
        i = j + 1
    return out


def _cmd_dispersion(cfg: RunConfig):
    A = aklt_tensor()
    h = aklt_projector()
    momenta = np.linspace(0.0, 2.0 * math.pi, cfg.pgrid)
    rows = []
    for ell in range(1, cfg.lmax + 1):
        ans = ExcitationAnsatz(A, ell, h)
        for p in momenta:
            e, _ = excitation_energies(ans.norm_matrix(p),
                                       ans.hamiltonian_matrix(p))
            deg = _degeneracy_labels(e)
            for level in range(min(cfg.levels, len(e))):
                rows.append((p, ell, level, e[level], deg[level], len(e)))
    constants = {"levels": cfg.levels, "pgrid": cfg.pgrid}
    return constants, ["p", "ell", "level", "energy", "degeneracy", "rank"], rows


def _cmd_converge(cfg: RunConfig):
    A = aklt_tensor()
    h = aklt_projector()
    p_list = cfg.p_list or ("0.4pi", "0.6pi", "0.8pi", "pi")
    momenta = [parse_momentum(t) for t in p_list]
    lowest = np.zeros((len(momenta), cfg.lmax))
    for ell in range(1, cfg.lmax + 1):
        ans = ExcitationAnsatz(A, ell, h)
        for i, p in enumerate(momenta):
            e, _ = excitation_energies(ans.norm_matrix(p),
                                       ans.hamiltonian_matrix(p))
            lowest[i, ell - 1] = e[0]
    rows = []
    for i, p in enumerate(momenta):
        for ell in range(1, cfg.lmax + 1):
            diff = lowest[i, ell - 1] - lowest[i, ell] if ell < cfg.lmax else None
            rows.append((p, ell, lowest[i, ell - 1], diff))
    constants = {"p_list": list(p_list)}
    return constants, ["p", "ell", "Emin", "diff_to_next"], rows


def _cmd_spectralfn(cfg: RunConfig):
    H = build_model(cfg.model, cfg.params, cfg.sites)
    lab = FilterLab(H)
    k = cfg.resolved_momentum()
    eig = lab.sector_eigen(k)
    O = parse_operator(cfg.op, H.d, H.N)
    line = dynamic_correlation(O, eig, lab.psi0, eta=cfg.eta, gap=lab.gap)
    rows = [(line.momentum, w, d.real, d.imag, s)
            for w, d, s in zip(line.omega, line.D, line.S)]
    res_rows = [(line.momentum, e, w)
                for e, w in zip(line.poles, line.residues)]
    res_path = cfg.residues_out or (os.path.splitext(cfg.out)[0]
                                    + ".residues.csv")
    constants = {"eta": line.eta, "gap": lab.gap,
                 "total_weight": line.total_weight}
    write_csv(res_path, cfg, constants, ["p", "energy", "weight"], res_rows)
    return constants, ["p", "omega", "reS", "imD", "S"], rows


def _cmd_lrcheck(cfg: RunConfig):
    H = build_model(cfg.model, cfg.params, cfg.sites)
    if H.d ** H.N > 20000:
        raise ConfigError("lrcheck requires dense evolution; chain too large")
    mu = cfg.mu if cfg.mu is not None else 1.0
    s = lr_constants(H, mu)
    dist = cfg.dist if cfg.dist is not None else H.N // 2
    A = parse_operator(cfg.op, H.d, H.N)
    B_op = parse_operator(cfg.op, H.d, H.N)
    B = RegionOperator(B_op.region.shift(dist), B_op.matrix, B_op.label)
    rows = []
    for t in cfg.times:
        lhs, rhs = lr_commutator_check(A, B, t, H, mu, s)
        rows.append((t, dist, lhs, rhs))
    constants = {"mu": mu, "s": s}
    return constants, ["t", "dist", "commutator", "bound"], rows


_RUNNERS = {
    "spectrum": _cmd_spectrum,
    "filter": _cmd_filter,
    "dispersion": _cmd_dispersion,
    "converge": _cmd_converge,
    "spectralfn": _cmd_spectralfn,
    "lrcheck": _cmd_lrcheck,
}


def run(cfg: RunConfig) -> None:
    """Execute one command and write its CSV and JSON metadata outputs."""
    t0 = time.time()
    constants, columns, rows = _RUNNERS[cfg.command](cfg)
    write_csv(cfg.out, cfg, constants, columns, rows)
    write_meta(_meta_path(cfg.out), cfg, constants, time.time() - t0)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for configuration errors
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="quasix",
                     description="numerical laboratory for gapped-chain excitations")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with defaults (flags win)")
    common.add_argument("--out", default=None, help="output CSV path")
    common.add_argument("--seed", type=int, default=None)
    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=("aklt", "tfim", "heisenberg"))
    model.add_argument("--params", action="append", default=None,
                       metavar="NAME=VALUE")
    model.add_argument("--sites", type=int, default=None)
    mom = argparse.ArgumentParser(add_help=False)
    mom.add_argument("--momentum", default=None,
                     help="momentum like 0.4pi (snapped to the grid)")
    mom.add_argument("--momentum-index", type=int, default=None)

    sub.add_parser("spectrum", parents=[common, model])
    p = sub.add_parser("filter", parents=[common, model, mom])
    p.add_argument("--op", default=None)
    p.add_argument("--alpha", type=int, default=None)
    p.add_argument("--lmax", type=int, default=None)
    p.add_argument("--mu", type=float, default=None)
    p = sub.add_parser("dispersion", parents=[common])
    p.add_argument("--lmax", type=int, default=None)
    p.add_argument("--pgrid", type=int, default=None)
    p.add_argument("--levels", type=int, default=None)
    p = sub.add_parser("converge", parents=[common])
    p.add_argument("--p", default=None, help="comma-separated momenta, e.g. 0.4pi,pi")
    p.add_argument("--lmax", type=int, default=None)
    p = sub.add_parser("spectralfn", parents=[common, model, mom])
    p.add_argument("--op", default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--residues-out", default=None)
    p = sub.add_parser("lrcheck", parents=[common, model])
    p.add_argument("--op", default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--dist", type=int, default=None)
    p.add_argument("--times", default=None, help="comma-separated times")
    return parser


def _load_toml(path: str) -> dict:
    import tomli
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _make_config(ns: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if getattr(ns, "config", None):
        base = _load_toml(ns.config)
    cfg = RunConfig(command=ns.command)

    def pick(flag, toml_key, default):
        v = getattr(ns, flag, None)
        if v is not None:
            return v
        return base.get(toml_key, default)

    cfg.model = pick("model", "model", cfg.model)
    raw_params = getattr(ns, "params", None)
    if raw_params is not None:
        cfg.params = parse_params(raw_params)
    else:
        cfg.params = dict(base.get("params", {}))
    cfg.sites = int(pick("sites", "sites", cfg.sites))
    cfg.momentum_index = pick("momentum_index", "momentum_index", None)
    cfg.momentum = pick("momentum", "momentum", None)
    cfg.op = pick("op", "op", cfg.op)
    cfg.alpha = int(pick("alpha", "alpha", cfg.alpha))
    cfg.lmax = int(pick("lmax", "lmax", cfg.lmax))
    cfg.pgrid = int(pick("pgrid", "pgrid", cfg.pgrid))
    p_raw = pick("p", "p", None)
    if p_raw:
        cfg.p_list = tuple(t for t in str(p_raw).split(",") if t)
    cfg.mu = pick("mu", "mu", None)
    cfg.eta = pick("eta", "eta", None)
    cfg.dist = pick("dist", "dist", None)
    times_raw = pick("times", "times", None)
    if times_raw is not None:
        if isinstance(times_raw, str):
            cfg.times = tuple(float(t) for t in times_raw.split(",") if t)
        else:
            cfg.times = tuple(float(t) for t in times_raw)
    cfg.levels = int(pick("levels", "levels", cfg.levels))
    cfg.seed = int(pick("seed", "seed", cfg.seed))
    cfg.out = pick("out", "out", f"{ns.command}.csv")
    cfg.residues_out = pick("residues_out", "residues_out", None)
    return cfg


def _cap_threads() -> None:
    cap = os.environ.get("QUASIX_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = cap


def main(argv: list[str] | None = None) -> int:
    _cap_threads()
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = _make_config(ns)
        run(cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"quasix: configuration error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, FloatingPointError, np.linalg.LinAlgError,
            RuntimeError) as exc:
        print(f"quasix: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
