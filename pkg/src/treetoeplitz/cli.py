"""Command-line entry point.

Wires JSON/flag configuration to the library and emits reproducible
artifacts.  Re-running a command with the same resolved configuration
produces byte-identical artifacts; timestamps live only in the manifest.

Exit codes are contractual:

* 0 -- success (and, for ``verify``, the statistical check passed)
* 2 -- validation error (bad flags, bad symbol spec, malformed config)
* 3 -- a size budget was exceeded
* 4 -- numeric certification failure (kernel spectrum outside [0, 1],
       eigensolver residuals, or a failed Monte-Carlo verification)
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .dpp import (
    CERTIFY_HARD_TOL,
    SampleConfig,
    rigidity_probe,
    sample,
    validate_kernel,
    verify_correlations,
    write_samples_jsonl,
)
from .errors import BudgetError, CertificationError, ValidationError
from .operators import (
    DEFAULT_MATRIX_BUDGET,
    build_matrix,
    operator_norm_estimate,
    radial_norm_check,
    spectrum as operator_spectrum,
)
from .polynomials import make_quadrature
from .symbols import (
    PolynomialSymbol,
    RadialSymbol,
    parse_symbol_spec,
    symbol_from_json,
)
from .transform import (
    DEFAULT_QUAD_NODES,
    convolve,
    hat_numeric,
    hat_polynomial_exact,
    truncation_bound,
)
from .tree import DEFAULT_VERTEX_BUDGET, enumerate_ball

BUDGET_ENV_VAR = "TREETOEPLITZ_VERTEX_BUDGET"

#: Tolerances recorded into every manifest for provenance.
MANIFEST_TOLERANCES = {
    "certify_hard_tol": CERTIFY_HARD_TOL,
    "default_quad_nodes": DEFAULT_QUAD_NODES,
    "eig_residual_rtol": 1e-8,
}

_COMMON_KEYS = {"kappa", "out", "quad_nodes", "budget"}
_ALLOWED_KEYS = {
    "transform": _COMMON_KEYS | {"phi", "phi_file", "nmax"},
    "convolve": _COMMON_KEYS | {"alpha", "alpha_file", "alpha2", "alpha2_file", "nmax_out"},
    "spectrum": _COMMON_KEYS | {"phi", "phi_file", "symbol_file", "radius", "export_matrix"},
    "norms": _COMMON_KEYS | {"alpha", "alpha_file", "phi", "phi_file", "radius", "radius_list"},
    "sample": _COMMON_KEYS | {"phi", "phi_file", "radius", "seed", "samples"},
    "verify": _COMMON_KEYS | {"phi", "phi_file", "radius", "seed", "samples", "max_pair_distance"},
    "rigidity": _COMMON_KEYS | {"interval", "radius_list"},
}


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _load_config_file(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValidationError("config file must hold a JSON object")
    unknown = set(obj) - _ALLOWED_KEYS[command]
    if unknown:
        raise ValidationError(
            f"unknown config keys for {command}: {sorted(unknown)}"
        )
    return obj


def _resolve(args: argparse.Namespace, command: str, defaults: dict) -> dict:
    """File values under flag values under defaults; all keys validated."""
    config = dict(defaults)
    if getattr(args, "config", None):
        config.update(_load_config_file(args.config, command))
    for key in _ALLOWED_KEYS[command]:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            config[key] = flag_val
    missing = [k for k, v in config.items() if v is None]
    if missing:
        raise ValidationError(f"missing required settings: {sorted(missing)}")
    return config


def _parse_inline_alpha(kappa: int, text: str) -> RadialSymbol:
    toks = [t for t in text.split(",") if t.strip()]
    if not toks:
        raise ValidationError("empty inline coefficient list")
    vals = []
    exact = True
    for t in toks:
        t = t.strip()
        try:
            vals.append(Fraction(t))
        except (ValueError, ZeroDivisionError):
            try:
                vals.append(float(t))
                exact = False
            except ValueError as exc:
                raise ValidationError(f"bad coefficient token {t!r}") from exc
    if exact:
        return RadialSymbol(kappa=kappa, values=tuple(vals), exact=True)
    return RadialSymbol(
        kappa=kappa, values=tuple(float(v) for v in vals), exact=False
    )


def _load_alpha(kappa: int, inline: str | None, path: str | None) -> RadialSymbol:
    if inline is not None:
        return _parse_inline_alpha(kappa, inline)
    if path is not None:
        with open(path) as fh:
            sym = RadialSymbol.from_json(fh.read())
        if sym.kappa != kappa:
            raise ValidationError(
                f"symbol file has kappa={sym.kappa}, command uses {kappa}"
            )
        return sym
    raise ValidationError("need an inline coefficient list or a symbol file")


def _load_phi(config: dict):
    """Symbol function from an inline spec or a JSON file."""
    if config.get("phi"):
        return parse_symbol_spec(config["phi"], config["kappa"])
    if config.get("phi_file"):
        with open(config["phi_file"]) as fh:
            return symbol_from_json(fh.read())
    raise ValidationError("need --phi or --phi-file")


def _alpha_for_ball(config: dict) -> RadialSymbol:
    """Transform the configured phi far enough for the configured ball."""
    kappa, radius = config["kappa"], config["radius"]
    phi = _load_phi(config)
    if isinstance(phi, PolynomialSymbol):
        return hat_polynomial_exact(phi.coeffs, kappa)
    return hat_numeric(phi, kappa, n_max=2 * radius, n_nodes=config["quad_nodes"])


def _write_json(path: Path, obj: dict, config_hash: str) -> None:
    obj = {"config_hash": config_hash, **obj}
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rows: list[list], config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        csv.writer(fh).writerows(rows)


def _write_manifest(outdir: Path, command: str, config: dict) -> str:
    h = _config_hash(config)
    manifest = {
        "command": command,
        "config": config,
        "config_hash": h,
        "version": __version__,
        "tolerances": MANIFEST_TOLERANCES,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return h


def _outdir(config: dict) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _symbol_json_obj(sym: RadialSymbol) -> dict:
    return json.loads(sym.to_json())


def _cmd_transform(config: dict) -> int:
    kappa = config["kappa"]
    phi = _load_phi(config)
    nmax = config["nmax"]
    if isinstance(phi, PolynomialSymbol):
        alpha = hat_polynomial_exact(phi.coeffs, kappa)
        vals = list(alpha.values) + [Fraction(0)] * (nmax + 1 - len(alpha.values))
        alpha = RadialSymbol(kappa=kappa, values=tuple(vals[: nmax + 1]), exact=True)
    else:
        alpha = hat_numeric(phi, kappa, n_max=nmax, n_nodes=config["quad_nodes"])
    outdir = _outdir(config)
    h = _write_manifest(outdir, "transform", config)
    _write_json(outdir / "alpha.json", _symbol_json_obj(alpha), h)
    rule = make_quadrature(kappa, config["quad_nodes"])
    _write_csv(
        outdir / "quadrature.csv",
        [["node", "weight"]]
        + [[repr(float(x)), repr(float(w))] for x, w in zip(rule.nodes, rule.weights)],
        h,
    )
    print(f"transform: wrote alpha.json with {alpha.n_max + 1} coefficients")
    return 0


def _cmd_convolve(config: dict) -> int:
    kappa = config["kappa"]
    a1 = _load_alpha(kappa, config.get("alpha"), config.get("alpha_file"))
    a2 = _load_alpha(kappa, config.get("alpha2"), config.get("alpha2_file"))
    nmax_out = config.get("nmax_out")
    result = convolve(a1, a2, n_max_out=nmax_out)
    bound = truncation_bound(a1, a2)
    outdir = _outdir(config)
    h = _write_manifest(outdir, "convolve", config)
    obj = _symbol_json_obj(result)
    obj["truncation_bound"] = bound
    _write_json(outdir / "convolution.json", obj, h)
    print(f"convolve: wrote convolution.json (truncation bound {bound:.3e})")
    return 0


def _cmd_spectrum(config: dict) -> int:
    kappa, radius = config["kappa"], config["radius"]
    if config.get("symbol_file"):
        alpha = _load_alpha(kappa, None, config["symbol_file"])
    elif config.get("phi") or config.get("phi_file"):
        alpha = _alpha_for_ball(config)
    else:
        raise ValidationError("spectrum needs --phi, --phi-file or --symbol-file")
    ball = enumerate_ball(kappa, radius, budget=config["budget"])
    op = build_matrix(alpha, ball, budget=config["budget"])
    eigs = operator_spectrum(op)
    outdir = _outdir(config)
    h = _write_manifest(outdir, "spectrum", config)
    _write_csv(
        outdir / "eigenvalues.csv",
        [["index", "eigenvalue"]] + [[i, repr(float(v))] for i, v in enumerate(eigs)],
        h,
    )
    _write_json(
        outdir / "operator.json",
        {
            "kappa": kappa,
            "radius": radius,
            "symbol": _symbol_json_obj(alpha),
            "min_eigenvalue": float(eigs[0]),
            "max_eigenvalue": float(eigs[-1]),
        },
        h,
    )
    if config.get("export_matrix"):
        _write_csv(
            outdir / "matrix.csv",
            [[repr(float(v)) for v in row] for row in op.matrix],
            h,
        )
    print(
        f"spectrum: {len(eigs)} eigenvalues in "
        f"[{eigs[0]:.6f}, {eigs[-1]:.6f}]"
    )
    return 0


def _cmd_norms(config: dict) -> int:
    kappa = config["kappa"]
    if config.get("radius_list"):
        radii = list(config["radius_list"])
    elif config.get("radius") is not None:
        radii = [config["radius"]]
    else:
        raise ValidationError("norms needs --radius or --radius-list")
    if config.get("alpha") or config.get("alpha_file"):
        alpha = _load_alpha(kappa, config.get("alpha"), config.get("alpha_file"))
    elif config.get("phi") or config.get("phi_file"):
        alpha = _alpha_for_ball({**config, "radius": max(radii)})
    else:
        raise ValidationError("norms needs --alpha, --alpha-file or --phi")
    outdir = _outdir(config)
    h = _write_manifest(outdir, "norms", config)
    rows = [["radius", "full_norm", "radial_norm", "gap"]]
    reports = []
    for radius in radii:
        chk = radial_norm_check(alpha, kappa, radius, budget=config["budget"])
        reports.append(chk)
        rows.append(
            [radius, repr(chk.full_norm), repr(chk.radial_norm), repr(chk.gap)]
        )
    trunc = operator_norm_estimate(alpha, kappa, radii, budget=config["budget"])
    _write_csv(outdir / "norms.csv", rows, h)
    _write_json(
        outdir / "norms.json",
        {
            "kappa": kappa,
            "radial_checks": [
                {
                    "radius": c.radius,
                    "full_norm": c.full_norm,
                    "radial_norm": c.radial_norm,
                    "gap": c.gap,
                }
                for c in reports
            ],
            "truncated_norms": [{"radius": r, "norm": v} for r, v in trunc],
        },
        h,
    )
    for c in reports:
        print(
            f"norms: R={c.radius} full={c.full_norm:.12f} "
            f"radial={c.radial_norm:.12f} gap={c.gap:.6e}"
        )
    return 0


def _kernel_from_config(config: dict):
    phi = _load_phi(config)
    return validate_kernel(
        phi,
        config["kappa"],
        config["radius"],
        n_nodes=config["quad_nodes"],
        budget=config["budget"],
    )


def _cmd_sample(config: dict) -> int:
    kernel = _kernel_from_config(config)
    cfg = SampleConfig(seed=config["seed"], n_samples=config["samples"])
    samples = sample(kernel, cfg)
    outdir = _outdir(config)
    h = _write_manifest(outdir, "sample", config)
    write_samples_jsonl(samples, outdir / "samples.jsonl")
    mean = float(np.mean([len(s) for s in samples])) if samples else 0.0
    _write_json(
        outdir / "sample_summary.json",
        {
            "n_samples": len(samples),
            "expected_points": kernel.expected_points,
            "mean_points": mean,
        },
        h,
    )
    print(
        f"sample: {len(samples)} samples, mean size {mean:.3f} "
        f"(expected {kernel.expected_points:.3f})"
    )
    return 0


def _standard_point_sets(kernel, max_pair_distance: int):
    """All singletons plus all pairs within the given distance."""
    from .tree import pairwise_distances

    D = pairwise_distances(kernel.ball)
    sets = [(i,) for i in range(len(kernel.ball))]
    n = D.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if D[i, j] <= max_pair_distance:
                sets.append((i, j))
    return sets


def _cmd_verify(config: dict) -> int:
    kernel = _kernel_from_config(config)
    cfg = SampleConfig(seed=config["seed"], n_samples=config["samples"])
    samples = sample(kernel, cfg)
    sets = _standard_point_sets(kernel, config["max_pair_distance"])
    report = verify_correlations(kernel, samples, sets)
    outdir = _outdir(config)
    h = _write_manifest(outdir, "verify", config)
    write_samples_jsonl(samples, outdir / "samples.jsonl")
    _write_csv(outdir / "correlations.csv", report.to_csv_rows(), h)
    _write_json(
        outdir / "verify_summary.json",
        {
            "n_samples": report.n_samples,
            "n_point_sets": len(report.rows),
            "worst_sigma": report.worst_sigma,
            "passed": report.passed,
        },
        h,
    )
    status = "PASS" if report.passed else "FAIL"
    print(
        f"verify: {status} over {len(report.rows)} point sets "
        f"(worst deviation {report.worst_sigma:.2f} sigma, 4 sigma allowed)"
    )
    return 0 if report.passed else 4


def _cmd_rigidity(config: dict) -> int:
    lo, hi = config["interval"]
    rows = rigidity_probe(
        config["kappa"],
        (lo, hi),
        config["radius_list"],
        n_nodes=config["quad_nodes"],
        budget=config["budget"],
    )
    outdir = _outdir(config)
    h = _write_manifest(outdir, "rigidity", config)
    table = [["radius", "region_radius", "region_size", "mean", "variance"]]
    for r in rows:
        table.append(
            [r.radius, r.region_radius, r.region_size, repr(r.mean), repr(r.variance)]
        )
    _write_csv(outdir / "rigidity.csv", table, h)
    for r in rows:
        print(
            f"rigidity: R={r.radius} |region|={r.region_size} "
            f"mean={r.mean:.4f} var={r.variance:.6f}"
        )
    print("rigidity: exploratory trend only, no rigidity conclusion is drawn")
    return 0


def _parse_interval(text: str) -> tuple[float, float]:
    txt = text.strip().lstrip("(").rstrip(")")
    parts = txt.split(",")
    if len(parts) != 2:
        raise ValidationError(f"bad interval {text!r}, expected (a,b)")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ValidationError(f"bad interval {text!r}") from exc
    if hi <= lo:
        raise ValidationError(f"interval {text!r} is empty")
    return lo, hi


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treetoeplitz",
        description="Radial Toeplitz operators and invariant point processes on Cayley trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--kappa", type=int, help="branching number kappa >= 1")
        p.add_argument("--out", type=str, help="output directory (default .)")
        p.add_argument("--quad-nodes", dest="quad_nodes", type=int,
                       help=f"quadrature nodes (default {DEFAULT_QUAD_NODES})")
        p.add_argument("--budget", type=int, help="vertex budget override")
        p.add_argument("--config", type=str, help="JSON config file; flags override it")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved config and exit")

    p = sub.add_parser("transform", help="symbol transform phi -> alpha")
    common(p)
    p.add_argument("--phi", type=str, help="symbol spec (poly:/step:/indicator:)")
    p.add_argument("--phi-file", dest="phi_file", type=str,
                   help="JSON file holding a symbol spec")
    p.add_argument("--nmax", type=int, help="largest coefficient index")

    p = sub.add_parser("convolve", help="radial convolution of two coefficient files")
    common(p)
    p.add_argument("--alpha", type=str, help="inline comma-separated coefficients")
    p.add_argument("--alpha-file", dest="alpha_file", type=str)
    p.add_argument("--alpha2", type=str)
    p.add_argument("--alpha2-file", dest="alpha2_file", type=str)
    p.add_argument("--nmax-out", dest="nmax_out", type=int)

    p = sub.add_parser("spectrum", help="eigenvalues of the ball truncation")
    common(p)
    p.add_argument("--phi", type=str)
    p.add_argument("--phi-file", dest="phi_file", type=str)
    p.add_argument("--symbol-file", dest="symbol_file", type=str)
    p.add_argument("--radius", type=int)
    p.add_argument("--export-matrix", dest="export_matrix", action="store_true",
                   default=None)

    p = sub.add_parser("norms", help="full vs radial truncated norms")
    common(p)
    p.add_argument("--alpha", type=str)
    p.add_argument("--alpha-file", dest="alpha_file", type=str)
    p.add_argument("--phi", type=str)
    p.add_argument("--phi-file", dest="phi_file", type=str)
    p.add_argument("--radius", type=int)
    p.add_argument("--radius-list", dest="radius_list", type=_parse_int_list)

    p = sub.add_parser("sample", help="draw seeded point-process samples")
    common(p)
    p.add_argument("--phi", type=str)
    p.add_argument("--phi-file", dest="phi_file", type=str)
    p.add_argument("--radius", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("verify", help="Monte-Carlo check of inclusion determinants")
    common(p)
    p.add_argument("--phi", type=str)
    p.add_argument("--phi-file", dest="phi_file", type=str)
    p.add_argument("--radius", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--max-pair-distance", dest="max_pair_distance", type=int)

    p = sub.add_parser("rigidity", help="count-variance growth probe")
    common(p)
    p.add_argument("--interval", type=_parse_interval,
                   help="spectral interval (a,b) for the indicator symbol")
    p.add_argument("--radius-list", dest="radius_list", type=_parse_int_list)

    return parser


_DEFAULTS = {
    "transform": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_VERTEX_BUDGET,
                  "kappa": None, "nmax": 16},
    "convolve": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_VERTEX_BUDGET,
                 "kappa": None},
    "spectrum": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_MATRIX_BUDGET,
                 "kappa": None, "radius": None},
    "norms": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_MATRIX_BUDGET,
              "kappa": None},
    "sample": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_MATRIX_BUDGET,
               "kappa": None, "radius": None, "seed": None,
               "samples": None},
    "verify": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_MATRIX_BUDGET,
               "kappa": None, "radius": None, "seed": None,
               "samples": None, "max_pair_distance": 2},
    "rigidity": {"out": ".", "quad_nodes": DEFAULT_QUAD_NODES, "budget": DEFAULT_MATRIX_BUDGET,
                 "kappa": None, "interval": None, "radius_list": None},
}

_RUNNERS = {
    "transform": _cmd_transform,
    "convolve": _cmd_convolve,
    "spectrum": _cmd_spectrum,
    "norms": _cmd_norms,
    "sample": _cmd_sample,
    "verify": _cmd_verify,
    "rigidity": _cmd_rigidity,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        defaults = dict(_DEFAULTS[command])
        env_budget = os.environ.get(BUDGET_ENV_VAR)
        if env_budget is not None:
            try:
                defaults["budget"] = int(env_budget)
            except ValueError as exc:
                raise ValidationError(
                    f"bad {BUDGET_ENV_VAR}={env_budget!r}"
                ) from exc
        config = _resolve(args, command, defaults)
        _validate_numeric_fields(config)
        if args.dry_run:
            print(json.dumps({"command": command, "config": config,
                              "config_hash": _config_hash(config)},
                             indent=2, sort_keys=True))
            return 0
        return _RUNNERS[command](config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CertificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def _validate_numeric_fields(config: dict) -> None:
    checks = {
        "kappa": lambda v: v >= 1,
        "radius": lambda v: v >= 0,
        "nmax": lambda v: v >= 0,
        "samples": lambda v: v >= 0,
        "quad_nodes": lambda v: v >= 2,
        "budget": lambda v: v >= 1,
        "max_pair_distance": lambda v: v >= 0,
    }
    for key, ok in checks.items():
        if key in config and config[key] is not None and not ok(config[key]):
            raise ValidationError(f"invalid value for {key}: {config[key]!r}")
    if "radius_list" in config and config["radius_list"] is not None:
        if not config["radius_list"] or any(r < 0 for r in config["radius_list"]):
            raise ValidationError(f"invalid radius list {config['radius_list']!r}")
    if "interval" in config and config["interval"] is not None:
        iv = config["interval"]
        if len(iv) != 2 or not float(iv[0]) < float(iv[1]):
            raise ValidationError(f"invalid interval {iv!r}")


if __name__ == "__main__":
    sys.exit(main())
