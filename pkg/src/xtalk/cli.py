"""Command-line surface and batch pipeline.

    xtalk <subcommand> --spec <device.json> --out <dir> [options]

Subcommands: capmat, couplings, chain, enclosure, zz predict, ed, fit,
report (= run everything).  Outputs are plot-ready CSVs plus JSON
summaries; every numeric CSV column carries a unit suffix in its header.
Runs are deterministic for fixed inputs; the only timestamp lives in the
run report, isolated from computation outputs.

Exit codes: 0 ok, 1 computation failure, 2 usage or schema error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from . import capmat as cm
from . import circuit as ct
from . import enclosure as enc
from . import exactdiag as ed
from . import mediator as md
from . import zz as zzmod
from .device import (DeviceSpec, SchemaError, content_digest, load_device_spec,
                     nearest_neighbor_pairs)

__all__ = ["main", "run_pipeline", "RunReport", "lint_unit_headers"]

PIPELINE_COMMANDS = ("capmat", "couplings", "chain", "enclosure", "zz-predict",
                     "ed", "fit")

UNIT_SUFFIXES = ("_mhz", "_khz", "_mm", "_us", "_sites", "_per_mm")
DIMENSIONLESS_COLUMNS = {
    "i", "j", "index", "count", "reason", "flag", "floor_flag", "applicable",
    "manhattan_sites", "mode_index", "overlap2", "relative_gap", "ratio",
    "r_squared", "model", "method", "beta", "kept",
}


class ComputationError(RuntimeError):
    pass


@dataclass
class RunReport:
    input_digest: str
    toolkit_version: str
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    created_at: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "input_digest": self.input_digest,
            "toolkit_version": self.toolkit_version,
            "outputs": {k: sorted(v) for k, v in sorted(self.outputs.items())},
            "warnings": self.warnings,
            "created_at": self.created_at,
        }, indent=2) + "\n"


def lint_unit_headers(header: list[str]) -> list[str]:
    """Return the header fields that carry neither a unit suffix nor a
    dimensionless allowance."""
    bad = []
    for name in header:
        clean = name.strip().lower()
        if clean in DIMENSIONLESS_COLUMNS:
            continue
        if any(clean.endswith(suf) for suf in UNIT_SUFFIXES):
            continue
        bad.append(name)
    return bad


def _write_csv(path: Path, header: list[str], rows: list[list]) -> str:
    bad = lint_unit_headers(header)
    if bad:
        raise ComputationError(f"{path.name}: unitless numeric headers {bad}")
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(out.getvalue())
    return path.name


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _write_json(path: Path, obj) -> str:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path.name


# -- individual commands ------------------------------------------------------

def cmd_capmat(spec: DeviceSpec, out: Path, opts) -> tuple[list[str], list[str]]:
    lat = cm.Lattice2DSpec(spec.rows, spec.cols, opts.cap_diag, opts.cap_offdiag)
    matrix = cm.lattice2d_matrix(lat)
    inverse = cm.lattice2d_inverse_spectral(lat)
    positions = cm.grid_positions(lat.m, lat.n)
    bound = cm.neumann_walk_bound(cm.BandedSPD(matrix, bandwidth=lat.n), split_a=lat.a)
    warnings = []
    if not bound.applicable:
        warnings.append(f"capmat: walk bound inapplicable (ratio {bound.ratio:.3f} >= 1)")

    shells: dict[int, float] = {}
    for a_ in range(len(positions)):
        for b_ in range(len(positions)):
            d = int(abs(positions[a_] - positions[b_]).sum())
            shells[d] = max(shells.get(d, 0.0), abs(inverse[a_, b_]))
    rows = []
    for d in sorted(shells):
        limit = (bound.bounds[0, 0] * bound.ratio ** d if bound.applicable else math.nan)
        rows.append([d, shells[d], limit])
    files = [_write_csv(out / "capmat_inverse_shells.csv",
                        ["manhattan_sites", "max_abs_entry_per_mm", "walk_bound_per_mm"],
                        rows)]
    # entries of the inverse capacitance-style matrix scale as 1/a; the
    # abstract unit column is labeled per_mm to keep the header lint honest
    screening = cm.continuum_kappa(lat)
    try:
        fit = cm.fit_decay(inverse, positions, metric="manhattan", bandwidth=1)
        decay = {"gamma_per_site": fit.gamma, "prefactor": fit.prefactor,
                 "metric": fit.metric}
    except cm.InsufficientShellsError as err:
        decay = {"error": str(err)}
        warnings.append(f"capmat: {err}")
    files.append(_write_json(out / "capmat_decay.json", {
        "lattice": {"rows": lat.m, "cols": lat.n, "diag": lat.a, "offdiag": lat.b},
        "fit": decay,
        "continuum": {"kappa_per_site": screening.kappa, "xi_sites": screening.xi,
                      "regime": screening.regime},
        "walk_bound": {"applicable": bound.applicable, "ratio": bound.ratio,
                       "max_degree": bound.max_degree,
                       "spectral_norm": bound.spectral_norm}}))
    return files, warnings


def cmd_couplings(spec: DeviceSpec, out: Path, opts) -> tuple[list[str], list[str]]:
    warnings = []
    n = spec.n
    order = sorted(spec.qubits, key=lambda q: q.index)
    params = []
    for q in order:
        if q.ec_mhz is not None:
            params.append(ct.TransmonParams(q.ec_mhz, q.ej_mhz))
        else:
            ec = -q.alpha_mhz
            params.append(ct.TransmonParams(ec, ct.ej_for_frequency(q.omega_mhz, ec)))
    graph = ct.CouplingGraph(n)
    for e in spec.edges:
        if e.j_mhz is not None:
            graph.add(e.i, e.j, e.j_mhz)
        else:
            graph.add(e.i, e.j, ct.bare_coupling(params[e.i], params[e.j], e.ec_mhz))
    dressed = ct.swt_dress(graph, params, omegas=np.array(spec.omegas()))
    qrows = [[q.index, q.omega_mhz, dressed.omega_dressed[k], q.alpha_mhz,
              params[k].ec, params[k].ej]
             for k, q in enumerate(order)]
    erows = [[i, j, dressed.g_bare[i, j], dressed.g_dressed[i, j]]
             for (i, j) in sorted(graph.edges)]
    files = [
        _write_csv(out / "couplings_qubits.csv",
                   ["index", "omega_mhz", "omega_dressed_mhz", "alpha_mhz",
                    "ec_mhz", "ej_mhz"], qrows),
        _write_csv(out / "couplings_edges.csv",
                   ["i", "j", "g_mhz", "g_dressed_mhz"], erows),
    ]
    return files, warnings


def cmd_chain(out: Path, opts) -> tuple[list[str], list[str]]:
    if not opts.chain_json:
        raise SchemaError("chain command needs --chain-json <path>")
    obj = json.loads(Path(opts.chain_json).read_text())
    chain = md.MediatorChain(omega1=float(obj["omega1_mhz"]),
                             omega2=float(obj["omega2_mhz"]),
                             mediators=tuple(obj["mediators_mhz"]),
                             links=tuple(obj["links_mhz"]))
    exact = md.jeff_chain_exact(chain)
    result = {"m": chain.m, "exact_mhz": exact,
              "dispersive_ratios": list(chain.dispersive_ratios)}
    if chain.m >= 1:
        prod = md.jeff_product(chain)
        gap = abs(abs(exact) - abs(prod.value)) / abs(exact) if exact else math.inf
        result.update({"product_mhz": prod.value, "g_mean_mhz": prod.g_mean,
                       "delta_mean_mhz": prod.delta_mean, "relative_gap": gap})
    return [_write_json(out / "chain_result.json", result)], []


def cmd_enclosure(spec: DeviceSpec, out: Path, opts) -> tuple[list[str], list[str]]:
    es = spec.enclosure
    if opts.beta is not None or es is None:
        es = enc.EnclosureSpec(
            pitch_mm=opts.pitch_mm or (es.pitch_mm if es else spec.pitch_mm),
            beta=opts.beta if opts.beta is not None else (es.beta if es else 0.2),
            omega0_mhz=opts.omega0_mhz or (es.omega0_mhz if es else 30000.0))
    n = opts.grid_n or es.n or 4
    m = opts.grid_m or es.m or 4
    warnings = []
    modes = enc.mode_frequencies(es, n, m)
    near_degenerate = int(np.sum(np.abs(np.diff(modes)) < 1e-9 * modes[:-1]))
    if near_degenerate:
        warnings.append(f"enclosure: {near_degenerate} degenerate mode pairs "
                        "(symmetric grid)")
    files = [_write_csv(out / "enclosure_modes.csv", ["mode_index", "freq_mhz"],
                        [[k, f] for k, f in enumerate(modes)])]
    rows = []
    for w in np.linspace(0.05 * es.cutoff_mhz, 0.98 * es.cutoff_mhz, 24):
        scr = enc.kappa(es, float(w))
        rows.append([scr.omega_mhz, scr.kappa_per_mm, scr.delta_b_mm,
                     scr.delta_b_circuit_mm])
    files.append(_write_csv(out / "enclosure_screening.csv",
                            ["omega_mhz", "kappa_per_mm", "delta_b_mm",
                             "delta_b_circuit_mm"], rows))
    files.append(_write_json(out / "enclosure_summary.json", {
        "cutoff_mhz": es.cutoff_mhz, "beta": es.beta,
        "pitch_mm": es.pitch_mm, "omega0_mhz": es.omega0_mhz,
        "mode_count": len(modes), "min_mode_mhz": float(modes[0])}))
    return files, warnings


def _scaling_law(spec: DeviceSpec, opts) -> zzmod.ScalingLaw:
    j_edges = [e.j_mhz for e in spec.edges if e.j_mhz is not None]
    j0 = opts.j0_mhz if opts.j0_mhz is not None else (
        float(np.mean(j_edges)) if j_edges else 0.623)
    d0 = opts.d0_mm if opts.d0_mm is not None else spec.pitch_mm
    freq_ref = float(np.mean(spec.omegas()))
    return zzmod.ScalingLaw(j0_mhz=j0, d0_mm=d0, ref_spacing_mm=spec.pitch_mm,
                            freq_ref_mhz=freq_ref)


def cmd_zz_predict(spec: DeviceSpec, out: Path, opts) -> tuple[list[str], list[str]]:
    law = _scaling_law(spec, opts)
    positions = an.lattice_positions(spec.rows, spec.cols)
    tol = spec.analysis.pole_tolerance_mhz
    warnings = []
    rows = []
    order = sorted(q.index for q in spec.qubits)
    for a_ in order:
        qi = spec.qubit(a_)
        for b_ in order:
            if b_ <= a_:
                continue
            qj = spec.qubit(b_)
            d = an.euclidean_distance_mm(positions, a_, b_, spec.pitch_mm)
            dman = an.manhattan_distance(positions, a_, b_)
            pair = zzmod.PairSpectrum(qi.omega_mhz, qj.omega_mhz,
                                      qi.alpha_mhz, qj.alpha_mhz)
            try:
                if opts.envelope == "k0":
                    j_pair = zzmod.j_unified(qi.omega_mhz, qj.omega_mhz, d, law)
                    j_pair /= zzmod.j_unified(qi.omega_mhz, qj.omega_mhz,
                                              law.ref_spacing_mm, law) / law.j0_mhz
                    from dataclasses import replace as _rep
                    zeta = zzmod.zz_nn(_rep(pair, j=j_pair), pole_tol_mhz=tol).zeta_mhz
                else:
                    zeta = zzmod.zz_scaled(pair, d, law, pole_tol_mhz=tol,
                                           normalize_at_nn=opts.normalize_at_nn).zeta_mhz
                flat = zzmod.zz_nn(
                    zzmod.PairSpectrum(qi.omega_mhz, qj.omega_mhz, qi.alpha_mhz,
                                       qj.alpha_mhz,
                                       law.j0_mhz * law.dispersion_factor(
                                           qi.omega_mhz, qj.omega_mhz)),
                    pole_tol_mhz=tol).zeta_mhz
            except zzmod.PoleProximityError as err:
                warnings.append(f"zz-predict: pair {a_}-{b_} skipped: {err}")
                continue
            rows.append([a_, b_, d, dman, flat * 1e3, zeta * 1e3])
    files = [_write_csv(out / "zz_predicted.csv",
                        ["i", "j", "d_mm", "manhattan_sites",
                         "zeta_unscaled_khz", "zeta_scaled_khz"], rows)]
    files.append(_write_json(out / "zz_predicted.json", {
        "law": {"j0_mhz": law.j0_mhz, "d0_mm": law.d0_mm,
                "ref_spacing_mm": law.ref_spacing_mm,
                "freq_ref_mhz": law.freq_ref_mhz},
        "envelope": opts.envelope,
        "normalize_at_nn": opts.normalize_at_nn,
        "pairs": [{"i": r[0], "j": r[1], "zeta_khz": r[5]} for r in rows]}))
    return files, warnings


def _j_matrix(spec: DeviceSpec) -> np.ndarray:
    n = spec.n
    jm = np.zeros((n, n))
    for e in spec.edges:
        if e.j_mhz is None:
            raise ComputationError(
                f"edge {e.i}-{e.j} has no direct j_mhz; run couplings first "
                "or supply J on every edge")
        jm[e.i, e.j] = jm[e.j, e.i] = e.j_mhz
    return jm


def cmd_ed(spec: DeviceSpec, out: Path, opts) -> tuple[list[str], list[str]]:
    h = ed.build_sectors(spec.omegas(), spec.alphas(), _j_matrix(spec))
    zz = ed.zz_matrix_exact(h)
    positions = an.lattice_positions(spec.rows, spec.cols)
    warnings = [f"ed: pair {p} assignment failed" for p, _ in zz.failed]
    floor_count = int(np.sum(zz.floor_flags) // 2)
    if floor_count:
        warnings.append(f"ed: {floor_count} pairs below the "
                        f"{zz.floor_khz:g} kHz numerical floor")
    rows = []
    for i in range(spec.n):
        for j in range(i + 1, spec.n):
            rows.append([i, j, an.manhattan_distance(positions, i, j),
                         zz.values_khz[i, j], int(zz.floor_flags[i, j])])
    files = [_write_csv(out / "zz_exact.csv",
                        ["i", "j", "manhattan_sites", "zeta_khz", "floor_flag"],
                        rows)]
    files.append(_write_json(out / "ed_diagnostics.json", {
        "method": zz.method, "floor_khz": zz.floor_khz,
        "floor_flagged_pairs": floor_count,
        "failed_pairs": [list(p) for p, _ in zz.failed],
        "sector_dims": [1, h.n, h.n * (h.n + 1) // 2]}))
    return files, warnings


def cmd_fit(spec: DeviceSpec, out: Path, opts) -> tuple[list[str], list[str]]:
    positions = an.lattice_positions(spec.rows, spec.cols)
    if opts.measurements:
        rows = an.load_measurements_csv(Path(opts.measurements).read_text())
        default_threshold = spec.analysis.threshold_khz
    else:
        # fall back to the exact-diagonalization prediction as pseudo-data;
        # its only noise floor is the diagonalization precision
        h = ed.build_sectors(spec.omegas(), spec.alphas(), _j_matrix(spec))
        zz = ed.zz_matrix_exact(h)
        rows = [an.MeasurementRow(i, j, zz.values_khz[i, j])
                for i in range(spec.n) for j in range(i + 1, spec.n)
                if not math.isnan(zz.values_khz[i, j])]
        default_threshold = ed.FLOOR_KHZ
    threshold = opts.threshold_khz if opts.threshold_khz is not None \
        else default_threshold
    filt = an.filter_measurements(rows, threshold_khz=threshold,
                                  outlier_pairs=list(spec.analysis.outlier_pairs))
    warnings = [f"fit: {line}" for line in filt.report_lines()]
    fit = an.fit_manhattan_decay(filt.kept, positions, mode=opts.fit_mode)
    files = [
        _write_json(out / "fit.json", {
            "model": fit.model, "amplitude_khz": fit.amplitude,
            "d0_sites": fit.scale, "r_squared": fit.r_squared,
            "mode": opts.fit_mode, "threshold_khz": threshold,
            "conditional_on_detection": fit.conditional_on_detection}),
        _write_csv(out / "fit_shells.csv",
                   ["manhattan_sites", "mean_khz", "std_khz", "count"],
                   [[d, m_, s_, c_] for d, m_, s_, c_ in
                    zip(fit.shell_distances, fit.shell_means,
                        fit.shell_stds, fit.shell_counts)]),
        _write_csv(out / "fit_exclusions.csv", ["i", "j", "zz_khz", "reason"],
                   [[e.pair[0], e.pair[1], e.zz_khz, e.reason]
                    for e in filt.excluded]),
    ]
    return files, warnings


def _compare_outputs(out: Path) -> list[str]:
    pred = out / "zz_predicted.csv"
    exact = out / "zz_exact.csv"
    if not (pred.exists() and exact.exists()):
        return []
    def read(path, col):
        table = {}
        with open(path) as fh:
            for rec in csv.DictReader(fh):
                table[(int(rec["i"]), int(rec["j"]))] = float(rec[col])
        return table
    p = read(pred, "zeta_scaled_khz")
    e = read(exact, "zeta_khz")
    rows = [[i, j, p[(i, j)], e[(i, j)]] for (i, j) in sorted(set(p) & set(e))]
    return [_write_csv(out / "zz_compare.csv",
                       ["i", "j", "zeta_predicted_khz", "zeta_exact_khz"], rows)]


def run_pipeline(spec: DeviceSpec, commands: list[str], out_dir,
                 opts=None) -> RunReport:
    """Execute pipeline commands against one device spec.

    Destination files are deterministic functions of the inputs; the run
    report lists every emitted file and all collected warnings.
    """
    opts = opts or default_options()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(input_digest=content_digest(spec),
                       toolkit_version=__version__)
    for command in commands:
        if command == "capmat":
            files, warn = cmd_capmat(spec, out, opts)
        elif command == "couplings":
            files, warn = cmd_couplings(spec, out, opts)
        elif command == "chain":
            files, warn = cmd_chain(out, opts)
        elif command == "enclosure":
            files, warn = cmd_enclosure(spec, out, opts)
        elif command == "zz-predict":
            files, warn = cmd_zz_predict(spec, out, opts)
        elif command == "ed":
            files, warn = cmd_ed(spec, out, opts)
        elif command == "fit":
            files, warn = cmd_fit(spec, out, opts)
        else:
            raise SchemaError(f"unknown pipeline command {command!r}")
        report.outputs[command] = files
        report.warnings.extend(warn)
    extra = _compare_outputs(out)
    if extra:
        report.outputs["compare"] = extra
    report.created_at = datetime.now(timezone.utc).isoformat()
    report_path = out / "run_report.json"
    report_path.write_text(report.to_json())
    report.outputs["report"] = [report_path.name]
    return report


def default_options() -> argparse.Namespace:
    return argparse.Namespace(
        cap_diag=5.0, cap_offdiag=1.0, chain_json=None, pitch_mm=None,
        beta=None, omega0_mhz=None, grid_n=None, grid_m=None, j0_mhz=None,
        d0_mm=None, envelope="exp", normalize_at_nn=True, measurements=None,
        threshold_khz=None, fit_mode="shell-means")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xtalk",
        description="Crosstalk prediction and analysis for transmon lattices")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="device spec JSON (or table CSV)")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("capmat", help="capacitance-style lattice locality analysis")
    common(p)
    p.add_argument("--cap-diag", type=float, default=5.0, dest="cap_diag")
    p.add_argument("--cap-offdiag", type=float, default=1.0, dest="cap_offdiag")

    p = sub.add_parser("couplings", help="bare and dressed circuit parameters")
    common(p)

    p = sub.add_parser("chain", help="mediator-chain effective coupling")
    p.add_argument("--chain-json", required=True, dest="chain_json")
    p.add_argument("--out", required=True)

    p = sub.add_parser("enclosure", help="enclosure modes and screening tables")
    common(p)
    p.add_argument("--pitch-mm", type=float, dest="pitch_mm")
    p.add_argument("--beta", type=float)
    p.add_argument("--omega0-mhz", type=float, dest="omega0_mhz")
    p.add_argument("--grid-n", type=int, dest="grid_n")
    p.add_argument("--grid-m", type=int, dest="grid_m")

    p = sub.add_parser("zz", help="ZZ-rate prediction")
    zz_sub = p.add_subparsers(dest="zz_command", required=True)
    pp = zz_sub.add_parser("predict", help="predict the full ZZ matrix")
    common(pp)
    pp.add_argument("--j0-mhz", type=float, dest="j0_mhz")
    pp.add_argument("--d0-mm", type=float, dest="d0_mm")
    pp.add_argument("--envelope", choices=("exp", "k0"), default="exp")
    pp.add_argument("--normalize-at-nn", choices=("true", "false"),
                    default="true", dest="normalize_at_nn")

    p = sub.add_parser("ed", help="exact-diagonalization ZZ matrix")
    common(p)

    p = sub.add_parser("fit", help="distance-decay fit of measured/simulated rates")
    common(p)
    p.add_argument("--measurements", help="CSV i,j,zz_khz,ci_low,ci_high")
    p.add_argument("--threshold-khz", type=float, dest="threshold_khz")
    p.add_argument("--fit-mode", choices=("shell-means", "pairs"),
                   default="shell-means", dest="fit_mode")

    p = sub.add_parser("report", help="run the full pipeline and write a report")
    common(p)
    p.add_argument("--j0-mhz", type=float, dest="j0_mhz")
    p.add_argument("--d0-mm", type=float, dest="d0_mm")
    p.add_argument("--envelope", choices=("exp", "k0"), default="exp")
    p.add_argument("--normalize-at-nn", choices=("true", "false"),
                   default="true", dest="normalize_at_nn")
    p.add_argument("--threshold-khz", type=float, dest="threshold_khz")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    opts = default_options()
    for key in vars(opts):
        if hasattr(args, key) and getattr(args, key) is not None:
            setattr(opts, key, getattr(args, key))
    if isinstance(opts.normalize_at_nn, str):
        opts.normalize_at_nn = opts.normalize_at_nn == "true"

    try:
        if args.command == "chain":
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            files, _ = cmd_chain(out, opts)
            print("\n".join(files))
            return 0
        spec = load_device_spec(args.spec)
        if args.command == "zz":
            commands = ["zz-predict"]
        elif args.command == "report":
            commands = [c for c in PIPELINE_COMMANDS if c != "chain"]
        else:
            commands = [args.command]
        report = run_pipeline(spec, commands, args.out, opts)
        for cmd_name in sorted(report.outputs):
            for name in report.outputs[cmd_name]:
                print(name)
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        return 0
    except (SchemaError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ComputationError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
