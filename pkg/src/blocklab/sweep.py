"""Config-driven BP experiment grids.

A sweep runs belief propagation across a grid of block-model parameters,
several seeds per point and one run per init mode, and writes one CSV row
per run.  Rows are deterministic for a fixed config: jobs are pure
functions of (grid index, seed), and the writer sorts rows and formats
floats the same way regardless of how the work was scheduled.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .bp import overlap, run_bp
from .nonbacktracking import build_nb, leading_spectrum
from .sbm import SbmParams, derive_params, sample_sbm

__all__ = ["SweepConfig", "parse_config", "load_config", "run_sweep", "SWEEP_COLUMNS"]

SWEEP_COLUMNS = [
    "experiment",
    "q",
    "n",
    "c_in",
    "c_out",
    "c",
    "lambda",
    "seed",
    "init",
    "converged",
    "sweeps",
    "overlap",
    "bethe_f",
]

_VALID_INITS = ("random", "uniform", "planted")


@dataclass(frozen=True)
class SweepConfig:
    """Parsed sweep description.

    The parameter grid is either a list of mean degrees `c` with a fixed
    mixing ratio `lam` (within-group degree c_in = c(1 + (q-1) lam),
    between-group c_out = c(1 - lam)), or explicit equal-length c_in /
    c_out lists.
    """

    experiment: str
    q: int
    n: int
    seeds: int
    inits: tuple[str, ...]
    out: str
    c_values: tuple[float, ...] = ()
    lam: float | None = None
    cin_values: tuple[float, ...] = ()
    cout_values: tuple[float, ...] = ()
    tol: float = 1e-6
    max_sweeps: int = 1000
    jobs: int = 1
    spectrum: bool = False
    extra: dict = field(default_factory=dict)

    def grid(self) -> list[tuple[float, float]]:
        """The (c_in, c_out) pairs, in grid order."""
        if self.c_values:
            lam = self.lam if self.lam is not None else 0.0
            return [
                (c * (1.0 + (self.q - 1) * lam), c * (1.0 - lam))
                for c in self.c_values
            ]
        return list(zip(self.cin_values, self.cout_values))


def _parse_bool(val: str) -> bool:
    low = val.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {val!r}")


def _parse_floats(val: str) -> tuple[float, ...]:
    items = [s.strip() for s in val.split(",") if s.strip()]
    return tuple(float(s) for s in items)


def parse_config(text: str) -> SweepConfig:
    """Parse `key = value` lines (# starts a comment) into a SweepConfig."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, val = line.split("=", 1)
        raw[key.strip()] = val.strip()

    def take(key: str, default=None):
        return raw.pop(key, default)

    experiment = take("experiment")
    if not experiment:
        raise ValueError("config must set experiment")
    out = take("out")
    if not out:
        raise ValueError("config must set out")
    try:
        q = int(take("q", "2"))
        n = int(take("n", "1000"))
        seeds = int(take("seeds", "1"))
        max_sweeps = int(take("max_sweeps", "1000"))
        jobs = int(take("jobs", "1"))
        tol = float(take("tol", "1e-6"))
    except ValueError as err:
        raise ValueError(f"bad numeric config value: {err}") from err
    inits = tuple(
        s.strip() for s in take("inits", "random").split(",") if s.strip()
    )
    for init in inits:
        if init not in _VALID_INITS:
            raise ValueError(f"unknown init mode {init!r}")
    if not inits:
        raise ValueError("config must list at least one init mode")
    if seeds < 1:
        raise ValueError(f"seeds must be >= 1, got {seeds}")
    lam_str = take("lambda")
    cfg = SweepConfig(
        experiment=experiment,
        q=q,
        n=n,
        seeds=seeds,
        inits=inits,
        out=out,
        c_values=_parse_floats(take("c", "")),
        lam=float(lam_str) if lam_str is not None else None,
        cin_values=_parse_floats(take("cin", "")),
        cout_values=_parse_floats(take("cout", "")),
        tol=tol,
        max_sweeps=max_sweeps,
        jobs=jobs,
        spectrum=_parse_bool(take("spectrum", "false")),
        extra=raw,
    )
    if raw:
        raise ValueError(f"unknown config keys: {sorted(raw)}")
    if cfg.c_values and (cfg.cin_values or cfg.cout_values):
        raise ValueError("give either a c grid or cin/cout grids, not both")
    if not cfg.c_values:
        if not cfg.cin_values or len(cfg.cin_values) != len(cfg.cout_values):
            raise ValueError("cin and cout grids must be non-empty and equal length")
    if cfg.c_values and cfg.lam is None:
        raise ValueError("a c grid needs lambda")
    if not cfg.grid():
        raise ValueError("parameter grid is empty")
    return cfg


def load_config(path: str) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _graph_seed(grid_index: int, seed: int) -> int:
    return int(np.random.SeedSequence([grid_index, seed]).generate_state(1)[0])


def _run_point(job) -> list[dict]:
    """One (grid point, seed): sample a graph, run BP once per init."""
    (experiment, q, n, c_in, c_out, gi, seed, inits, tol, max_sweeps) = job
    p = SbmParams.symmetric(q=q, n=n, c_in=c_in, c_out=c_out)
    d = derive_params(p)
    g, truth = sample_sbm(p, seed=_graph_seed(gi, seed))
    rows = []
    for init in inits:
        res = run_bp(
            g,
            p,
            init=init,
            seed=seed,
            truth=truth,
            tol=tol,
            max_sweeps=max_sweeps,
        )
        rows.append(
            {
                "experiment": experiment,
                "q": q,
                "n": n,
                "c_in": float(c_in),
                "c_out": float(c_out),
                "c": float(d.c),
                "lambda": float(d.lam),
                "seed": seed,
                "init": init,
                "converged": bool(res.converged),
                "sweeps": int(res.sweeps),
                "overlap": float(overlap(res.hard_labels, truth, q)),
                "bethe_f": float(res.bethe_free_energy),
                "_gi": gi,
            }
        )
    return rows


def _write_rows(rows: list[dict], out: str) -> None:
    """Write the CSV through a .partial file, renamed only on success."""
    partial = out + ".partial"
    with open(partial, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["experiment"],
                    row["q"],
                    row["n"],
                    repr(row["c_in"]),
                    repr(row["c_out"]),
                    repr(row["c"]),
                    repr(row["lambda"]),
                    row["seed"],
                    row["init"],
                    "true" if row["converged"] else "false",
                    row["sweeps"],
                    repr(row["overlap"]),
                    repr(row["bethe_f"]),
                ]
            )
    os.replace(partial, out)


def _dump_spectra(cfg: SweepConfig) -> None:
    for gi, (c_in, c_out) in enumerate(cfg.grid()):
        p = SbmParams.symmetric(q=cfg.q, n=cfg.n, c_in=c_in, c_out=c_out)
        g, _ = sample_sbm(p, seed=_graph_seed(gi, 0))
        spec = leading_spectrum(build_nb(g), g, k=cfg.q, seed=0)
        path = f"{cfg.out}.spectrum.{gi}.csv"
        partial = path + ".partial"
        with open(partial, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["re", "im"])
            for val in spec.eigenvalues:
                writer.writerow([repr(float(val.real)), repr(float(val.imag))])
        os.replace(partial, path)


def run_sweep(cfg: SweepConfig) -> list[dict]:
    """Run the whole grid and write cfg.out; returns the rows.

    Work items are independent across (grid point, seed); an optional
    process pool (cfg.jobs > 1) changes wall time only.  Any IO failure
    leaves `<out>.partial` behind instead of a complete file.
    """
    jobs = [
        (
            cfg.experiment,
            cfg.q,
            cfg.n,
            c_in,
            c_out,
            gi,
            seed,
            cfg.inits,
            cfg.tol,
            cfg.max_sweeps,
        )
        for gi, (c_in, c_out) in enumerate(cfg.grid())
        for seed in range(cfg.seeds)
    ]
    if cfg.jobs > 1:
        with Pool(processes=cfg.jobs) as pool:
            nested = pool.map(_run_point, jobs)
    else:
        nested = [_run_point(job) for job in jobs]
    rows = [row for group in nested for row in group]
    init_order = {name: i for i, name in enumerate(cfg.inits)}
    rows.sort(key=lambda r: (r["_gi"], r["seed"], init_order[r["init"]]))
    for row in rows:
        del row["_gi"]
    _write_rows(rows, cfg.out)
    if cfg.spectrum:
        _dump_spectra(cfg)
    return rows
