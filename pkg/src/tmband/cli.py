"""Command-line front end: analysis, DOS, design and verification runs.

Examples:
  tmband analyze --model chain.json --out results/
  tmband dos --model '{"n": 3, "t": [1.0, 0.925, 0.3]}' --out results/
  tmband design --n 3 --order 4 --location zone_edge --free t3=0.3
  tmband sweep --model chain.json --out results/ --samples 2000
  tmband verify --seed 42 --out results/

Curves are written as CSV (one quantity per file), structured reports as
JSON.  Identical arguments and seed reproduce byte-identical outputs; all
grids and tolerances used appear in the output metadata.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .model import LatticeModel, ModelError, band_extent, dispersion
from . import critical
from . import designer
from . import dos
from . import transfer
from . import verify as verify_mod

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_NO_CONVERGENCE = 3

SWEEP_SAMPLES = 2000
SWEEP_PAD = 0.05
FIT_WINDOW = (1e-6, 1e-3)


def _load_model(spec: str) -> LatticeModel:
    text = spec.strip()
    if not text.startswith("{"):
        path = Path(text)
        if not path.exists():
            raise ModelError(f"model file not found: {path}")
        text = path.read_text()
    return LatticeModel.from_json(text)


def _parse_free(items) -> dict:
    free = {}
    for item in items or []:
        try:
            name, value = item.split("=", 1)
            index = int(name.strip().lstrip("t").lstrip("_"))
            free[index] = float(value)
        except ValueError as exc:
            raise ModelError(f"bad --free entry {item!r}, expected e.g. t3=0.3") from exc
    return free


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _omega_grid(model: LatticeModel, samples: int) -> np.ndarray:
    lo, hi = band_extent(model)
    width = hi - lo
    return np.linspace(lo - SWEEP_PAD * width, hi + SWEEP_PAD * width, samples)


def _eigen_sweep(model: LatticeModel, samples: int):
    for w in _omega_grid(model, samples):
        yield transfer.spectrum_via_dispersion(model, float(w))


def cmd_analyze(args) -> int:
    model = _load_model(args.model)
    out = _out_dir(args)
    points = critical.find_critical_points(model)
    report = {
        "model": model.to_dict(),
        "band": dict(zip(("omega_min", "omega_max"), band_extent(model))),
        "critical_points": critical.critical_report(points),
    }
    _write_json(out / "critical_points.json", report)

    k = np.linspace(-math.pi, math.pi, 2001)[1:]
    eps = np.real(dispersion(model, k))
    _write_csv(out / "dispersion.csv", ("k", "eps"), zip(map(float, k), map(float, eps)))

    grid = _omega_grid(model, args.samples)
    counts = [transfer.unit_modulus_count(model, float(w)) for w in grid]
    _write_csv(
        out / "unit_modulus_count.csv",
        ("omega", "count"),
        zip(map(float, grid), counts),
    )
    transfer.write_eigenset_csv(out / "eigen_sweep.csv", _eigen_sweep(model, args.samples))
    return EXIT_OK


def cmd_sweep(args) -> int:
    model = _load_model(args.model)
    out = _out_dir(args)
    transfer.write_eigenset_csv(out / "eigen_sweep.csv", _eigen_sweep(model, args.samples))
    return EXIT_OK


def cmd_dos(args) -> int:
    model = _load_model(args.model)
    out = _out_dir(args)
    curve = dos.dos_curve(model, k_step=args.k_step, e_step=args.e_step)
    _write_csv(
        out / "dos_curve.csv",
        ("omega", "nu"),
        zip(map(float, curve.energies), map(float, curve.values)),
    )
    _write_json(
        out / "dos_curve_grid.json",
        {"grid": curve.grid, "critical_energies": list(curve.critical_energies)},
    )

    fits = []
    crit_energies = sorted({cp.omega0 for cp in critical.find_critical_points(model)})
    for cp in critical.find_critical_points(model):
        if cp.k0 < 0:
            continue  # the -k0 partner carries the same singularity
        sides = {"minimum": ("above",), "maximum": ("below",), "saddle": ("above", "below")}[cp.kind]
        for side in sides:
            gap = min(
                (abs(w - cp.omega0) for w in crit_energies if abs(w - cp.omega0) > 1e-12),
                default=math.inf,
            )
            window = (FIT_WINDOW[0], min(FIT_WINDOW[1], 0.5 * gap))
            entry = {
                "k0": cp.k0,
                "omega0": cp.omega0,
                "order": cp.order,
                "side": side,
                "window": list(window),
                "expected_exponent": -(cp.order - 1) / cp.order,
            }
            try:
                near = dos.dos_curve_near(
                    model, cp.omega0, side, window=window, k_step=args.k_step
                )
                entry.update(dos.fit_exponent(near, cp.omega0, side, window))
                entry["status"] = "ok"
            except ValueError as exc:
                entry["status"] = f"skipped: {exc}"
            fits.append(entry)
    _write_json(out / "dos_fits.json", {"model": model.to_dict(), "fits": fits})
    return EXIT_OK


def cmd_design(args) -> int:
    free = _parse_free(args.free)
    try:
        if args.count > 1:
            outcomes = designer.hypersurface_sample(
                args.n, args.order, args.location, args.count, seed=args.seed
            )
            payload = {"samples": [o.to_dict() for o in outcomes]}
            code = EXIT_OK
        else:
            request = designer.DesignRequest(
                n=args.n, order=args.order, location=args.location, free=free
            )
            if args.location == "interior":
                result = designer.design_odd_ep(request, seed=args.seed)
            else:
                result = designer.design_even_ep(request)
            payload = result.to_dict()
            code = EXIT_OK
    except designer.DesignError as exc:
        payload = {"status": "no_solution", "detail": str(exc)}
        if exc.residual_trace:
            payload["residual_trace"] = exc.residual_trace[:8]
        code = EXIT_NO_CONVERGENCE
    out = _out_dir(args)
    _write_json(out / "design_result.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return code


def cmd_verify(args) -> int:
    report = verify_mod.run_verify(
        seed=args.seed,
        models=args.models,
        spectra=args.spectra,
        scan_samples=args.scan_samples,
        fast=args.fast,
    )
    out = _out_dir(args)
    _write_json(out / "verify_report.json", report)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}")
    print(("PASS" if report["passed"] else "FAIL") + " overall")
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmband",
        description="Transfer-matrix band analysis for 1D finite-range hopping chains",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="model JSON file or inline JSON")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("analyze", help="critical points, c(omega) staircase, eigenvalue sweep",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p)
    p.add_argument("--samples", type=int, default=SWEEP_SAMPLES, help="energy sweep samples")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="eigenvalue traces over an energy sweep (CSV)",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p)
    p.add_argument("--samples", type=int, default=SWEEP_SAMPLES, help="energy sweep samples")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dos", help="density of states curve and divergence-exponent fits",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p)
    p.add_argument("--k-step", type=float, default=dos.DEFAULT_K_STEP, help="momentum grid step")
    p.add_argument("--e-step", type=float, default=None,
                   help="difference step near singularities (default 1e-7 * bandwidth)")
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("design", help="hopping strengths realizing a target coalescence order",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--n", type=int, required=True, help="hopping range")
    p.add_argument("--order", type=int, required=True, help="target order")
    p.add_argument("--location", choices=designer.LOCATIONS, required=True)
    p.add_argument("--free", action="append", metavar="tM=VALUE",
                   help="fix a free hopping, e.g. --free t3=0.3 (repeatable)")
    p.add_argument("--count", type=int, default=1,
                   help="sample this many hypersurface points instead of one design")
    p.add_argument("--seed", type=int, default=0, help="multistart seed")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="run the randomized invariant suites",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--models", type=int, default=200, help="models in the equivalence scan")
    p.add_argument("--spectra", type=int, default=500, help="draws in the spectral suite")
    p.add_argument("--scan-samples", type=int, default=100_000,
                   help="samples in the order-5 evidence scan")
    p.add_argument("--fast", action="store_true", help="reduced counts for a quick pass")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except transfer.EigensolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    raise SystemExit(main())
