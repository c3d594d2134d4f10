"""
Command-line front end.

    nsomsim <fieldmap|scan|sweep|quantum|validate> --config RUN.ini [--out DIR] [--threads N]

Exit codes: 0 success, 1 configuration error, 2 numerical error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile

import numpy as np

from . import emitter_dynamics as dyn
from .config import RunConfig, parse_config, render_config
from .errors import ConfigError, NumericalError
from .scanner import field_lines, field_map, resolution_sweep, scan_line

log = logging.getLogger("nsomsim")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
SUBCOMMANDS = ("fieldmap", "scan", "sweep", "quantum", "validate")
# thread count does not change results, so it stays out of the file headers
HEADER_SKIP = ("scan.threads", "output.directory")


def _num(v) -> str:
    return repr(float(v))


class OutputSet:
    """Files of one run; written via temp files and removed again on failure."""

    def __init__(self, directory):
        self.directory = directory
        self.written = []

    def write(self, name, text):
        os.makedirs(self.directory, exist_ok=True)
        path = os.path.join(self.directory, name)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.written.append(path)
        return path

    def discard(self):
        for path in self.written:
            try:
                os.unlink(path)
            except OSError:
                pass
        self.written = []


def header(cfg: RunConfig, what: str, extra=()) -> str:
    lines = [f"# nsomsim {what}"]
    lines += [f"# {ln}" if ln else "#" for ln in render_config(cfg, HEADER_SKIP).splitlines()]
    lines += [f"# {e}" for e in extra]
    return "\n".join(lines) + "\n"


def csv_table(cfg, what, columns, rows, extra=()) -> str:
    body = [",".join(columns)]
    body += [",".join(r) for r in rows]
    return header(cfg, what, extra) + "\n".join(body) + "\n"


def pgm16(values: np.ndarray, decades: float) -> str:
    """Plain 16-bit PGM of ``values`` (row 0 = bottom), clamped to ``decades``."""
    vmax = float(np.max(values))
    lo = vmax - decades
    scaled = np.round((np.clip(values, lo, vmax) - lo) / decades * 65535).astype(int)
    h, w = scaled.shape
    out = ["P2", f"# log10|E|^2 range [{lo!r}, {vmax!r}]", f"{w} {h}", "65535"]
    for row in scaled[::-1]:
        for s in range(0, w, 12):
            out.append(" ".join(str(v) for v in row[s:s + 12]))
    return "\n".join(out) + "\n"


def run_scan(cfg, out, threads):
    sr = scan_line(cfg.tip_model(), cfg.sample_model(), cfg.env_model(),
                   (cfg.scan.x_min, cfg.scan.x_max), cfg.scan.step, threads,
                   cfg.environment.side)
    if cfg.output.normalize:
        sr = sr.normalized()
    rows = [(_num(x), _num(s)) for x, s in zip(sr.positions, sr.signal)]
    out.write("scan.csv", csv_table(cfg, "scan", ("position_nm", "signal"), rows))


def run_sweep(cfg, out, threads):
    xs = cfg.sample.emitters
    if len(xs) != 2:
        raise ConfigError("sweep needs exactly two emitters in [sample]")
    d = abs(xs[1] - xs[0])
    table = resolution_sweep(cfg.tip_model(), d, cfg.scan.heights, cfg.env_model(),
                             (cfg.scan.x_min, cfg.scan.x_max), cfg.scan.step, threads,
                             cfg.environment.side)
    rows = [(_num(r.h), str(r.resolved).lower(), _num(r.dip_contrast)) for r in table.rows]
    extra = [f"separation_nm = {d!r}", f"contrast_monotone = {str(table.monotone).lower()}"]
    out.write("sweep.csv", csv_table(cfg, "sweep", ("h_nm", "resolved", "dip_contrast"),
                                     rows, extra))


def run_fieldmap(cfg, out, threads):
    tip, env, grid = cfg.tip_model(), cfg.env_model(), cfg.grid_model()
    values = field_map(tip, env, grid, cfg.environment.side, threads)
    out.write("fieldmap.pgm", pgm16(values, cfg.output.log_decades))
    X, Z = np.meshgrid(grid.xs, grid.zs)
    rows = [(_num(x), _num(z), _num(v)) for x, z, v in zip(X.ravel(), Z.ravel(), values.ravel())]
    out.write("fieldmap.csv", csv_table(cfg, "fieldmap", ("x_nm", "z_nm", "log10_E2"), rows))
    lines = field_lines(tip, env, cfg.seed_points(), cfg.grid.arc_step, cfg.grid.max_steps,
                        ((grid.x_range), (-1.0, 1.0), (grid.z_range)), cfg.environment.side)
    rows, extra = [], []
    for i, ln in enumerate(lines):
        extra.append(f"line {i}: seed_index={ln.seed_index} backward={ln.termination[0]} "
                     f"forward={ln.termination[1]}")
        rows += [(str(i), str(j), _num(p[0]), _num(p[1]), _num(p[2]))
                 for j, p in enumerate(ln.points)]
    out.write("fieldlines.csv", csv_table(cfg, "fieldlines",
                                          ("line", "index", "x_nm", "y_nm", "z_nm"), rows, extra))


def run_quantum(cfg, out, threads):
    q = cfg.quantum
    t = np.linspace(0.0, q.t_max, q.n_times)
    ee, gg = dyn.evolve_populations(q.sigma_ee0, q.gamma, q.pumping, t)
    rows = [(_num(a), _num(b), _num(c)) for a, b, c in zip(t, ee, gg)]
    extra = [f"gamma_per_ns = {q.gamma!r}", f"pumping_per_ns = {q.pumping!r}"]
    out.write("quantum_populations.csv",
              csv_table(cfg, "quantum", ("t_ns", "sigma_ee", "sigma_gg"), rows, extra))
    rates = np.linspace(0.0, q.saturation_max * q.gamma, q.n_saturation)
    rows = [(_num(r), _num(dyn.stationary_population(q.gamma, r)[0])) for r in rates]
    out.write("quantum_saturation.csv",
              csv_table(cfg, "quantum saturation", ("pumping_per_ns", "sigma_ss"), rows, extra))


def run_validate(cfg, out, threads):
    from .validation import run_all

    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} invariants hold")
    return EXIT_OK if not failed else EXIT_NUMERIC


RUNNERS = {"scan": run_scan, "sweep": run_sweep, "fieldmap": run_fieldmap,
           "quantum": run_quantum, "validate": run_validate}


def run_subcommand(name, cfg: RunConfig, out_dir=None, threads=None) -> int:
    if threads is None:
        threads = cfg.scan.threads
    out = OutputSet(out_dir or cfg.output.directory)
    try:
        code = RUNNERS[name](cfg, out, threads)
    except ConfigError as exc:
        out.discard()
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        out.discard()
        log.error("numerical error: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        out.discard()
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except BaseException:
        out.discard()
        raise
    for p in out.written:
        log.info("wrote %s", p)
    return code or EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nsomsim", description=__doc__.split("\n")[1])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="run configuration (INI); defaults when omitted")
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = all cores")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    threads = args.threads
    if os.environ.get("NSOM_THREADS"):
        threads = int(os.environ["NSOM_THREADS"])
    return run_subcommand(args.subcommand, cfg, args.out, threads)


if __name__ == "__main__":
    sys.exit(main())
