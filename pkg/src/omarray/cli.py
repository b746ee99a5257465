"""Command-line front end.

Each subcommand reads one JSON run configuration and writes CSV or JSON.
Outputs contain no timestamps, so identical configs give identical bytes.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import copy
import hashlib
import io
import json
import sys

import jsonschema
import numpy as np

from . import __version__
from .bands import band_edges, dispersion, unit_cell_trace, wannier_function
from .coupling import PhysicalScales, collective_coupling, compute_couplings, select_operating_point
from .errors import (
    ConvergenceError,
    DegenerateMatrixError,
    DegeneratePointError,
    InvalidInputError,
    TrackingError,
)
from .geometry import ArraySpec, CavityPlatformSpec, CrystalSpec, assemble_crystal, assemble_platform_a
from .resonance import Spectrum, compound_resonances, find_transmissive_points
from .supercavity import SideMirrorSpec, crystal_couplings, empty_transmission, tune_dm
from .tmat import chain, field_profile, reflectivity, transmission

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["platform"],
    "additionalProperties": False,
    "properties": {
        "platform": {"enum": ["array", "cavity", "crystal", "supercavity"]},
        "array": {
            "type": "object",
            "required": ["n", "zeta", "d"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 0},
                "zeta": _NUM,
                "d": _POS,
                "alpha": {"type": "number", "minimum": 0},
            },
        },
        "cavity": {
            "type": "object",
            "required": ["length", "zeta_m"],
            "additionalProperties": False,
            "properties": {"length": _POS, "zeta_m": _NUM},
        },
        "crystal": {
            "type": "object",
            "required": ["n_side", "zeta_m"],
            "additionalProperties": False,
            "properties": {
                "n_side": {"type": "integer", "minimum": 0},
                "zeta_m": _NUM,
                "d_m": _POS,
                "dm_range": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
                "dm_steps": {"type": "integer", "minimum": 2},
                "orders": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            },
        },
        "supercavity": {
            "type": "object",
            "required": ["n_m", "zeta_m", "d_m", "length"],
            "additionalProperties": False,
            "properties": {
                "n_m": {"type": "integer", "minimum": 1},
                "zeta_m": _NUM,
                "d_m": {"type": "number", "minimum": 0},
                "length": _POS,
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kd_over_pi_min": {"type": "number", "minimum": 0},
                "kd_over_pi_max": _POS,
                "samples": {"type": "integer", "minimum": 2},
                "d_ref": _POS,
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kd_over_pi": _POS,
                "reference_kd_over_pi": _POS,
                "x_min": _NUM,
                "x_max": _NUM,
                "points": {"type": "integer", "minimum": 2},
            },
        },
        "operating_point": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kd_over_pi": _POS,
                "select": {"enum": ["max-coupling", "nearest"]},
            },
        },
        "scales": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x0": _POS, "omega_m_hz": _POS},
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step_h": _POS,
                "threshold": _POS,
                "refine_tol": _POS,
                "quadrature_nodes": {"type": "integer", "minimum": 8},
                "sum_upper": {"type": "integer", "minimum": 0},
            },
        },
        "bands": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "zeta": _NUM,
                "kd_over_pi_min": {"type": "number", "minimum": 0},
                "kd_over_pi_max": _POS,
                "samples": {"type": "integer", "minimum": 2},
                "wannier_sites": {"type": "array", "items": {"type": "integer"}},
                "x_min": _NUM,
                "x_max": _NUM,
                "x_points": {"type": "integer", "minimum": 2},
            },
        },
    },
}


class ConfigError(Exception):
    """Invalid configuration, reported with the offending field path."""


def load_config(path):
    """Read and validate a JSON run configuration."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from exc
    needs = {"array": ["array"], "cavity": ["array", "cavity"], "crystal": ["array", "crystal"],
             "supercavity": ["supercavity"]}
    for key in needs[cfg["platform"]]:
        if key not in cfg:
            raise ConfigError(f"{key}: required for platform '{cfg['platform']}'")


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _array(cfg):
    a = cfg["array"]
    return ArraySpec(a["n"], a["zeta"], a["d"], a.get("alpha", 0.0))


def _crystal(cfg, d_m=None):
    c = cfg["crystal"]
    d_m = c.get("d_m") if d_m is None else d_m
    if d_m is None:
        raise ConfigError("crystal/d_m: required for this command")
    return CrystalSpec(_array(cfg), c["n_side"], c["zeta_m"], d_m)


def build_system(cfg):
    """SystemSpec of the configured platform."""
    platform = cfg["platform"]
    if platform == "array":
        return _array(cfg).system()
    if platform == "cavity":
        cav = cfg["cavity"]
        return assemble_platform_a(CavityPlatformSpec(_array(cfg), cav["length"], cav["zeta_m"]))
    if platform == "crystal":
        return assemble_crystal(_crystal(cfg))
    raise ConfigError(f"platform: '{platform}' has no explicit element list")


def _d_ref(cfg):
    scan = cfg.get("scan", {})
    if "d_ref" in scan:
        return scan["d_ref"]
    if cfg["platform"] == "supercavity":
        return cfg["supercavity"]["d_m"] or 1.0
    return cfg["array"]["d"]


def _scales(cfg):
    s = cfg.get("scales", {})
    return PhysicalScales(
        x0=s.get("x0", 2.7e-15), omega_m=2 * np.pi * s.get("omega_m_hz", 211e3)
    )


def _header(cfg, columns, extra=()):
    lines = [
        f"# omarray {__version__}",
        f"# config_sha256_16 {config_hash(cfg)}",
        f"# platform {cfg['platform']}",
        "# units " + ", ".join(columns),
    ]
    lines.extend(f"# {e}" for e in extra)
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return repr(float(v))


def _table(names, cols):
    buf = io.StringIO()
    buf.write(",".join(names) + "\n")
    for row in zip(*cols):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def cmd_spectrum(cfg):
    scan = cfg.get("scan", {})
    d_ref = _d_ref(cfg)
    kd = np.linspace(scan.get("kd_over_pi_min", 0.01), scan.get("kd_over_pi_max", 2.0),
                     scan.get("samples", 2001))
    k = kd * np.pi / d_ref
    if cfg["platform"] == "supercavity":
        sc = cfg["supercavity"]
        side = SideMirrorSpec(sc["n_m"], sc["zeta_m"], sc["d_m"])
        t = np.asarray(empty_transmission(k, sc["length"], side))
        r = 1 - t
        note = "model: two effective side mirrors around an empty gap"
    else:
        system = build_system(cfg)
        m = chain(system, k)
        r, t = reflectivity(m), transmission(m)
        note = "model: explicit transfer-matrix chain"
    extra = [f"d_ref_m {d_ref!r}", note]
    if cfg["platform"] == "array" and len(system) >= 2:
        num = cfg.get("numerics", {})
        spectrum = Spectrum(k=k, reflectivity=r, transmission=t, d_ref=d_ref)
        points = find_transmissive_points(spectrum, system, threshold=num.get("threshold", 0.5),
                                          tol_kd=num.get("refine_tol", 1e-12))
        extra.append("transmissive_kd_over_pi " + ";".join(
            f"{p.kd_over_pi!r}:band{p.band_index}:{'ok' if p.verified else 'unverified'}"
            f"{':degenerate' if p.degenerate else ''}" for p in points))
    head = _header(cfg, ["k_rad_per_m: rad/m", "kd_over_pi: k*d_ref/pi", "reflectivity: 1",
                         "transmission: 1"], extra)
    return head + _table(["k_rad_per_m", "kd_over_pi", "reflectivity", "transmission"],
                         [k, kd, r, t])


def cmd_field(cfg):
    if cfg["platform"] == "supercavity":
        raise ConfigError("platform: field profiles need an explicit element list")
    fld = cfg.get("field", {})
    if "kd_over_pi" not in fld:
        raise ConfigError("field/kd_over_pi: required (or pass --k)")
    system = build_system(cfg)
    d = cfg["array"]["d"]
    xs = system.positions
    lo = fld.get("x_min", xs[0] - 2 * d if len(system) else -1e-6)
    hi = fld.get("x_max", xs[-1] + 2 * d if len(system) else 1e-6)
    x = np.linspace(lo, hi, fld.get("points", 2001))
    k = fld["kd_over_pi"] * np.pi / d
    e = field_profile(system, k, x)
    ref_cfg = copy.deepcopy(cfg)
    if "array" in ref_cfg:
        ref_cfg["array"]["alpha"] = 0.0
    k_ref = fld.get("reference_kd_over_pi", fld["kd_over_pi"]) * np.pi / d
    e_ref = field_profile(build_system(ref_cfg), k_ref, x)
    scale = float(np.max(e_ref)) if e_ref.size else 1.0
    head = _header(cfg, ["x_m: m", "abs_E: incident amplitude 1", "abs_E_normalized: 1"], [
        f"k_rad_per_m {k!r}",
        f"normalization max|E| of the alpha=0 array at kd/pi={k_ref * d / np.pi!r}",
        "points on a scatterer take the left-side value",
    ])
    return head + _table(["x_m", "abs_E", "abs_E_normalized"], [x, e, e / scale])


def _report_json(report):
    out = report.to_dict()
    for key in ("g1_sin", "g2_sin", "g0_1", "g0_2", "g_opt", "omega_c"):
        out[key + "_hz"] = out[key] / (2 * np.pi)
    out["units"] = {"rates": "rad/s", "_hz": "value / 2pi", "resonance_k": "rad/m"}
    return out


def cmd_couplings(cfg, sum_upper=None):
    if cfg["platform"] not in ("cavity", "crystal"):
        raise ConfigError("platform: couplings need 'cavity' or 'crystal'")
    op = cfg.get("operating_point", {})
    if "kd_over_pi" not in op:
        raise ConfigError("operating_point/kd_over_pi: required")
    num = cfg.get("numerics", {})
    d = cfg["array"]["d"]
    step = num.get("step_h")
    step = None if step is None else step * d
    upper = sum_upper if sum_upper is not None else num.get("sum_upper")
    scales = _scales(cfg)
    k_target = op["kd_over_pi"] * np.pi / d
    if cfg["platform"] == "crystal":
        report = crystal_couplings(_crystal(cfg), k_target, scales, step)
        if upper is not None:
            report = _resum(report, upper)
        payload = _report_json(report)
    else:
        system = build_system(cfg)
        table = []
        if op.get("select", "max-coupling") == "max-coupling":
            k0, table = select_operating_point(system, k_target, step_h=step)
        else:
            k0 = compound_resonances(system, k_target)[0]
        cav = cfg["cavity"]
        report = compute_couplings(system, k0, cav["length"], cfg["array"]["zeta"], scales,
                                   step, upper)
        payload = _report_json(report)
        payload["candidates"] = [{"k": k, "rss_dk_dx": v} for k, v in table]
    payload["kd_over_pi"] = report.resonance_k * d / np.pi
    payload["config_sha256_16"] = config_hash(cfg)
    payload["version"] = __version__
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _resum(report, upper):
    report.sum_upper = upper
    report.g1_sin = collective_coupling(report.g1_per_membrane, upper)
    report.g2_sin = collective_coupling(report.g2_per_membrane, upper)
    report.enhancement_1 = report.g1_sin / abs(report.g0_1)
    report.enhancement_2 = report.g2_sin / abs(report.g0_2)
    return report


def cmd_tune(cfg):
    if cfg["platform"] != "crystal":
        raise ConfigError("platform: tune needs 'crystal'")
    c = cfg["crystal"]
    if "dm_range" not in c:
        raise ConfigError("crystal/dm_range: required for tune")
    inner = _array(cfg)
    hits = tune_dm(inner, c["n_side"], c["zeta_m"], tuple(c["dm_range"]),
                   c.get("orders", list(range(1, 9))), c.get("dm_steps", 400))
    d_m = c.get("d_m")
    rows = []
    for h in hits:
        row = h.to_dict()
        row["d_m_over_nm"] = h.d_m * 1e9
        rows.append(row)
    payload = {"hits": rows, "config_sha256_16": config_hash(cfg), "version": __version__,
               "units": {"d_m": "m", "k": "rad/m", "kd_m_over_pi": "k*d_m/pi"}}
    if d_m is not None and "operating_point" in cfg:
        k_target = cfg["operating_point"]["kd_over_pi"] * np.pi / inner.spacing_d
        payload["couplings"] = _report_json(crystal_couplings(_crystal(cfg), k_target, _scales(cfg)))
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_bands(cfg):
    b = cfg.get("bands", {})
    if "zeta" in b:
        zeta = b["zeta"]
    elif "array" in cfg:
        zeta = cfg["array"]["zeta"]
    else:
        raise ConfigError("bands/zeta: required")
    kd_pi = np.linspace(b.get("kd_over_pi_min", 0.0), b.get("kd_over_pi_max", 3.0),
                        b.get("samples", 1001))
    kd = kd_pi * np.pi
    bp = dispersion(kd, zeta)
    tr = unit_cell_trace(kd, zeta)
    edges = [band_edges(zeta, n) for n in range(int(np.ceil(kd[-1] / np.pi)) + 1)]
    extra = ["band_edges_kd " + ";".join(f"{lo!r}:{hi!r}" for lo, hi in edges)]
    head = _header(cfg, ["kd_over_pi: 1", "kd: rad", "a: 1", "qd: rad (nan in gaps)", "kappa_d: 1",
                         "propagating: 0/1", "trace: 1"], extra)
    body = _table(["kd_over_pi", "kd", "a", "qd", "kappa_d", "propagating", "trace"],
                  [kd_pi, kd, bp.a, bp.q, bp.kappa, bp.propagating, tr.real])
    wannier = None
    sites = b.get("wannier_sites")
    if sites:
        nodes = cfg.get("numerics", {}).get("quadrature_nodes", 256)
        x = np.linspace(b.get("x_min", -4.0), b.get("x_max", 4.0), b.get("x_points", 801))
        cols, names = [x], ["x_over_d"]
        for s in sites:
            w = wannier_function(s, zeta, x, nodes=nodes)
            cols += [w.real, w.imag]
            names += [f"w{s}_re", f"w{s}_im"]
        wannier = _header(cfg, ["x_over_d: 1", "w: 1/sqrt(d)"]) + _table(names, cols)
    return head + body, wannier


def _apply_overrides(cfg, args):
    cfg = copy.deepcopy(cfg)
    if getattr(args, "alpha", None) is not None:
        cfg.setdefault("array", {})["alpha"] = args.alpha
    if getattr(args, "k", None) is not None:
        if args.command == "field":
            cfg.setdefault("field", {})["kd_over_pi"] = args.k
        else:
            cfg.setdefault("operating_point", {})["kd_over_pi"] = args.k
    return cfg


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="omarray", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("spectrum", "reflectivity and transmission versus kd/pi (CSV)"),
        ("field", "field magnitude profile at one wavenumber (CSV)"),
        ("couplings", "linear and quadratic couplings at a resonance (JSON)"),
        ("tune", "side-spacing tuning of a crystal (JSON)"),
        ("bands", "infinite-array dispersion and Wannier samples (CSV)"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--alpha", type=float, help="override the defect strength")
        p.add_argument("--k", type=float, help="override the wavenumber, in kd/pi")
        if name == "couplings":
            p.add_argument("--sum-upper", type=int, dest="sum_upper",
                           help="number of membranes in the collective sum")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        validate_config(cfg)
        if args.command == "spectrum":
            _write(cmd_spectrum(cfg), args.out)
        elif args.command == "field":
            _write(cmd_field(cfg), args.out)
        elif args.command == "couplings":
            _write(cmd_couplings(cfg, args.sum_upper), args.out)
        elif args.command == "tune":
            _write(cmd_tune(cfg), args.out)
        else:
            table, wannier = cmd_bands(cfg)
            _write(table, args.out)
            if wannier is not None:
                target = None if args.out is None else args.out + ".wannier.csv"
                _write(wannier, target)
    except (ConfigError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrackingError, ConvergenceError, DegenerateMatrixError, DegeneratePointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
