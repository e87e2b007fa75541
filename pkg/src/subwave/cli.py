"""Scenario-driven command line front end.

Subcommands: capacity, resonances, psf, imaging, validate-integrals,
validate.  Each run reads an optional flat key-value config, writes
deterministic CSV/JSON artifacts into the output directory and finishes
with a manifest listing every produced file with its sha256.

Exit codes: 0 success, 1 numerical failure, 2 config error.

Only stdlib is imported at module level so that --threads (or the
RES_THREADS override) can cap the BLAS thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


class ConfigError(ValueError):
    """Malformed or incomplete scenario configuration."""


def _apply_threads(threads):
    """Pin thread pools; RES_THREADS overrides the flag when set."""
    env = os.environ.get("RES_THREADS")
    if env is not None:
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(f"RES_THREADS must be an integer, got {env!r}")
    if threads is None:
        return
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    for var in _THREAD_VARS:
        os.environ[var] = str(threads)


# ---------------------------------------------------------------------------
# flat key-value config


def parse_config(path) -> dict:
    """Read 'key = value' lines; '#' starts a comment, blanks ignored."""
    cfg = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in cfg:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        cfg[key] = value.strip()
    return cfg


_REQUIRED = object()


def _get(cfg, key, kind, convert, default=_REQUIRED):
    if key not in cfg:
        if default is _REQUIRED:
            raise ConfigError(f"missing required field '{key}' for run kind '{kind}'")
        return default
    try:
        return convert(cfg[key])
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"field '{key}': {exc}")


def cfg_float(cfg, key, kind, default=_REQUIRED):
    return _get(cfg, key, kind, float, default)


def cfg_int(cfg, key, kind, default=_REQUIRED):
    return _get(cfg, key, kind, int, default)


def cfg_str(cfg, key, kind, default=_REQUIRED):
    return _get(cfg, key, kind, str, default)


def cfg_bool(cfg, key, kind, default=_REQUIRED):
    def conv(s):
        low = s.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {s!r}")

    return _get(cfg, key, kind, conv, default)


def cfg_floats(cfg, key, kind, default=_REQUIRED):
    def conv(s):
        items = [p for p in s.replace(";", ",").split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return [float(p) for p in items]

    return _get(cfg, key, kind, conv, default)


def cfg_point(cfg, key, kind, default=_REQUIRED):
    def conv(s):
        vals = [float(p) for p in s.split(",") if p.strip()]
        if len(vals) != 3:
            raise ValueError(f"expected 'x1,x2,x3', got {s!r}")
        return vals

    return _get(cfg, key, kind, conv, default)


def cfg_centers(cfg, key, kind, default=_REQUIRED):
    """Aperture centers: semicolon-separated pairs or triples."""

    def conv(s):
        groups = [g for g in s.split(";") if g.strip()]
        if not groups:
            raise ValueError("empty center list")
        out = []
        for g in groups:
            vals = [float(p) for p in g.split(",") if p.strip()]
            if len(vals) == 2:
                vals.append(0.0)
            if len(vals) != 3:
                raise ValueError(f"center {g!r} is not a 2D/3D point")
            out.append(vals)
        return out

    return _get(cfg, key, kind, conv, default)


def _scan_points(cfg, kind, default_from, default_to, default_count):
    import numpy as np

    a = cfg_point(cfg, "scan_from", kind, default_from)
    b = cfg_point(cfg, "scan_to", kind, default_to)
    n = cfg_int(cfg, "scan_count", kind, default_count)
    if n < 2:
        raise ConfigError("field 'scan_count': need at least 2 points")
    frac = np.linspace(0.0, 1.0, n)[:, None]
    return np.asarray(a) + frac * (np.asarray(b) - np.asarray(a))


def _build_system_from(cfg, kind):
    from .system import build_system

    centers = cfg_centers(cfg, "centers", kind, [[0.0, 0.0, 0.0]])
    return build_system(
        height=cfg_float(cfg, "height", kind, 1.0),
        epsilon=cfg_float(cfg, "epsilon", kind),
        centers=centers,
        alpha0=cfg_float(cfg, "alpha0", kind, 0.0),
        re_alpha1=cfg_float(cfg, "re_alpha1", kind, 0.0),
    )


# ---------------------------------------------------------------------------
# subcommand runners; each returns the list of files it wrote


def run_capacity(cfg, out_dir, seed, rng):
    from .aperture import (
        assemble_riesz_matrix,
        capacity_record,
        disk_mesh,
        ellipse_mesh,
        export_density_csv,
        polygon_mesh,
        scaled_capacity,
        solve_equilibrium,
    )
    from .serialize import write_json

    kind = "capacity"
    shape = cfg_str(cfg, "shape", kind, "unit_disk")
    resolution = cfg_int(cfg, "resolution", kind, 24)
    if shape == "unit_disk":
        mesh = disk_mesh(resolution)
    elif shape == "ellipse":
        mesh = ellipse_mesh(
            cfg_float(cfg, "ellipse_a", kind),
            cfg_float(cfg, "ellipse_b", kind),
            resolution,
        )
    elif shape == "polygonal":
        pts = cfg_floats(cfg, "polygon_vertices", kind)
        if len(pts) % 2 != 0 or len(pts) < 6:
            raise ConfigError(
                "field 'polygon_vertices': expected x1,y1,...,xn,yn with n >= 3"
            )
        verts = [pts[i : i + 2] for i in range(0, len(pts), 2)]
        mesh = polygon_mesh(verts, resolution)
    else:
        raise ConfigError(
            f"field 'shape': unknown shape {shape!r} "
            "(expected unit_disk, ellipse or polygonal)"
        )
    matrix = assemble_riesz_matrix(mesh, check=False)
    density = solve_equilibrium(mesh, matrix)
    record = capacity_record(density)
    if shape == "unit_disk":
        record["exact"] = 2.0
        record["relative_error"] = abs(density.capacity - 2.0) / 2.0
    epsilon = cfg_float(cfg, "epsilon", kind, None)
    if epsilon is not None:
        record["epsilon"] = epsilon
        record["scaled_capacity"] = scaled_capacity(density.capacity, epsilon)
    json_path = os.path.join(out_dir, "capacity.json")
    write_json(json_path, record)
    csv_path = os.path.join(out_dir, "density.csv")
    export_density_csv(density, csv_path)
    print(f"capacity[{shape}] = {density.capacity:.9g}  ({mesh.size} nodes)")
    return [json_path, csv_path]


def run_resonances(cfg, out_dir, seed, rng):
    from .resonance import (
        resonance_rows,
        resonances_asymptotic,
        resonances_oracle,
        window_check,
    )
    from .serialize import write_csv, write_json
    from .system import interaction_matrices, spectral_record

    kind = "resonances"
    system = _build_system_from(cfg, kind)
    spectral = interaction_matrices(system)
    with_oracle = cfg_bool(cfg, "oracle", kind, True)
    if with_oracle:
        res = resonances_oracle(system, spectral)
    else:
        res = resonances_asymptotic(system, spectral)
    in_window = window_check(res, system.height, warn=True)
    csv_path = os.path.join(out_dir, "resonances.csv")
    write_csv(
        csv_path,
        ["mode", "branch", "re_k", "im_k", "re_k_oracle", "im_k_oracle", "gap"],
        resonance_rows(res),
    )
    summary = spectral_record(system, spectral)
    summary["count"] = len(res)
    summary["max_gap"] = max((r.gap for r in res if r.oracle is not None), default=None)
    summary["within_window"] = in_window
    json_path = os.path.join(out_dir, "resonances.json")
    write_json(json_path, summary)
    print(f"{len(res)} resonances (M = {system.n_resonators})")
    return [csv_path, json_path]


def run_psf(cfg, out_dir, seed, rng):
    import numpy as np

    from .green import psf_scan_rows
    from .imaging import NoPeakError, focal_metrics
    from .resonance import resonances_asymptotic
    from .serialize import write_csv, write_json
    from .system import interaction_matrices

    kind = "psf"
    system = _build_system_from(cfg, kind)
    spectral = interaction_matrices(system)
    res = resonances_asymptotic(system, spectral)
    k_raw = cfg_str(cfg, "k", kind, "resonant")
    if k_raw == "resonant":
        k = res[0].value.real
    else:
        try:
            k = float(k_raw)
        except ValueError:
            raise ConfigError(f"field 'k': expected a number or 'resonant', got {k_raw!r}")
    z = system.centers[0]
    # source sits above the scan line so default scans cannot hit it
    x0 = cfg_point(cfg, "x0", kind, [z[0], z[1], 0.8])
    points = _scan_points(
        cfg,
        kind,
        [z[0] - 2.0, z[1], 0.5],
        [z[0] + 2.0, z[1], 0.5],
        161,
    )
    rows = psf_scan_rows(points, np.asarray(x0), k, system, spectral, res)
    csv_path = os.path.join(out_dir, "psf_scan.csv")
    header = [
        "x1", "x2", "x3", "im_total",
        "re_g1", "im_g1", "re_g2", "im_g2",
        "re_g3", "im_g3", "re_g4", "im_g4",
    ]
    write_csv(csv_path, header, rows)
    arc = np.linalg.norm(points - points[0], axis=1)
    im_total = np.array([row[3] for row in rows])
    summary = {"k": k, "rows": len(rows), "x0": list(map(float, x0))}
    try:
        peak = focal_metrics(arc, np.abs(im_total))
        summary["fwhm_im_total"] = peak.fwhm
        summary["peak_arc_position"] = peak.peak_position
    except NoPeakError:
        summary["fwhm_im_total"] = None
    json_path = os.path.join(out_dir, "psf_summary.json")
    write_json(json_path, summary)
    print(f"psf scan at k = {k:.6g}: {len(rows)} points")
    return [csv_path, json_path]


def _imaging_one_epsilon(cfg, out_dir, seed, rng, epsilon, tag):
    import numpy as np

    from .imaging import (
        NoPeakError,
        focal_metrics,
        imaging_scan_rows,
        make_root_signal,
    )
    from .resonance import resonances_asymptotic
    from .serialize import write_csv
    from .system import build_system, interaction_matrices

    kind = "imaging"
    centers = cfg_centers(cfg, "centers", kind, [[0.0, 0.0, 0.0]])
    system = build_system(
        height=cfg_float(cfg, "height", kind, 1.0),
        epsilon=epsilon,
        centers=centers,
        alpha0=cfg_float(cfg, "alpha0", kind, 1.0),
        re_alpha1=cfg_float(cfg, "re_alpha1", kind, 0.0),
    )
    spectral = interaction_matrices(system)
    res = resonances_asymptotic(system, spectral)
    sig = make_root_signal(
        cfg_str(cfg, "signal", kind, "smooth_bump"),
        c1=cfg_float(cfg, "c1", kind, 1.0),
        epsilon=epsilon,
        delta=cfg_float(cfg, "delta", kind, 0.25),
    )
    t = cfg_float(cfg, "t", kind, 0.0)
    z = system.centers[0]
    x0 = np.asarray(cfg_point(cfg, "x0", kind, [z[0], z[1], 0.5]))
    points = _scan_points(
        cfg,
        kind,
        [z[0] - 2.0, z[1], 0.5],
        [z[0] + 2.0, z[1], 0.5],
        81,
    )
    residual = None
    residual_scale = cfg_float(cfg, "residual_scale", kind, None)
    if residual_scale is not None:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(system.n_resonators, 2))
        residual = residual_scale * np.exp(1j * phases)
    rows = imaging_scan_rows(points, x0, t, sig, system, spectral, res,
                             residual=residual)
    csv_path = os.path.join(out_dir, f"imaging_{tag}.csv")
    write_csv(
        csv_path,
        ["x1", "x2", "x3", "i1", "i2", "i3", "i4", "i5", "total", "prediction"],
        rows,
    )
    arc = np.linalg.norm(points - points[0], axis=1)
    i3 = np.array([row[5] for row in rows])
    try:
        metrics = focal_metrics(arc, np.abs(i3))
        fwhm = metrics.fwhm
    except NoPeakError:
        fwhm = None
    return csv_path, {"epsilon": epsilon, "fwhm_resonator_term": fwhm, "rows": len(rows)}


def run_imaging(cfg, out_dir, seed, rng):
    from .serialize import write_json

    kind = "imaging"
    if "epsilon_list" in cfg:
        eps_values = cfg_floats(cfg, "epsilon_list", kind)
    else:
        eps_values = [cfg_float(cfg, "epsilon", kind)]
    files = []
    per_eps = []
    for epsilon in eps_values:
        tag = f"eps_{epsilon:.3e}".replace(".", "p").replace("-", "m").replace("+", "")
        csv_path, entry = _imaging_one_epsilon(cfg, out_dir, seed, rng, epsilon, tag)
        files.append(csv_path)
        per_eps.append(entry)
        fw = entry["fwhm_resonator_term"]
        print(
            f"imaging eps = {epsilon:g}: fwhm(resonator term) = "
            f"{'n/a' if fw is None else f'{fw:.4f}'}"
        )
    summary = {"runs": per_eps, "fwhm_ratios": {}}
    for i in range(len(per_eps)):
        for j in range(i + 1, len(per_eps)):
            fi = per_eps[i]["fwhm_resonator_term"]
            fj = per_eps[j]["fwhm_resonator_term"]
            key = f"{per_eps[i]['epsilon']:g}/{per_eps[j]['epsilon']:g}"
            summary["fwhm_ratios"][key] = None if not fi or not fj else fi / fj
    json_path = os.path.join(out_dir, "imaging_summary.json")
    write_json(json_path, summary)
    files.append(json_path)
    return files


def run_validate_integrals(cfg, out_dir, seed, rng):
    from .lorentzian import comparison_rows
    from .serialize import write_csv, write_json

    kind = "validate-integrals"
    count = cfg_int(cfg, "count", kind, 20)
    if count < 1:
        raise ConfigError("field 'count': need at least one spec")
    header, rows = comparison_rows(rng, count)
    csv_path = os.path.join(out_dir, "lorentzian_table.csv")
    write_csv(csv_path, header, rows)
    widths = [max(len(h), 12) for h in header]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(f"{v:12.5e}".rjust(w) for v, w in zip(row, widths)))
    err_cols = [i for i, h in enumerate(header) if h.endswith("_err")]
    summary = {
        header[i]: max(abs(row[i]) for row in rows) for i in err_cols
    }
    summary["count"] = count
    summary["seed"] = seed
    json_path = os.path.join(out_dir, "lorentzian_summary.json")
    write_json(json_path, summary)
    worst = max((v for k, v in summary.items() if k.endswith("exact_err")), default=0.0)
    print(f"worst exact-vs-quadrature error over {count} specs: {worst:.3e}")
    return [csv_path, json_path]


def run_validate(cfg, out_dir, seed, rng):
    from .acceptance import run_acceptance
    from .serialize import write_csv, write_json

    kind = "validate"
    chosen = None
    if "criteria" in cfg:
        chosen = [int(p) for p in cfg_floats(cfg, "criteria", kind)]
    results = run_acceptance(chosen, seed=seed, out_dir=out_dir)
    rows = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.index:02d} {r.name}: {r.detail}")
        rows.append([r.index, 1.0 if r.passed else 0.0, r.measured, r.tolerance])
    csv_path = os.path.join(out_dir, "validate_report.csv")
    write_csv(csv_path, ["criterion", "passed", "measured", "tolerance"], rows)
    json_path = os.path.join(out_dir, "validate_report.json")
    write_json(
        json_path,
        {
            "results": [
                {
                    "criterion": r.index,
                    "name": r.name,
                    "passed": r.passed,
                    "measured": r.measured,
                    "tolerance": r.tolerance,
                    "detail": r.detail,
                }
                for r in results
            ],
            "all_passed": all(r.passed for r in results),
        },
    )
    failed = [r.index for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {failed}")
    else:
        print(f"all {len(results)} criteria passed")
    return [csv_path, json_path], not failed


_RUNNERS = {
    "capacity": run_capacity,
    "resonances": run_resonances,
    "psf": run_psf,
    "imaging": run_imaging,
    "validate-integrals": run_validate_integrals,
    "validate": run_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="subwave",
        description="Sub-wavelength resonator numerics: capacity, resonances, "
        "point spread functions and broadband imaging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key = value scenario file")
        p.add_argument("--out", default=None, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized modes")
        p.add_argument("--threads", type=int, default=None,
                       help="cap BLAS threads (RES_THREADS env overrides)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_threads(args.threads)
        if args.seed < 0:
            raise ConfigError("--seed must be a non-negative integer")
        cfg = parse_config(args.config) if args.config else {}
        out_dir = args.out or os.path.join("out", args.command)
        os.makedirs(out_dir, exist_ok=True)

        import numpy as np

        rng = np.random.default_rng(args.seed)
        runner = _RUNNERS[args.command]
        ok = True
        if args.command == "validate":
            files, ok = runner(cfg, out_dir, args.seed, rng)
        else:
            files = runner(cfg, out_dir, args.seed, rng)

        from .serialize import write_manifest

        write_manifest(out_dir, files, extra={"kind": args.command, "seed": args.seed})
        return 0 if ok else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - map module errors onto exit codes
        from .system import ParameterError

        if isinstance(exc, ParameterError):
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
