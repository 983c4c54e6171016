"""Batch runner: ``kclg <subcommand> [--config file.json] [--flag value ...]``.

Configuration values come from built-in defaults, then the JSON config
file, then command-line flags.  The merged configuration is checked
against a strict JSON schema.  Every run writes its outputs and a
``manifest.json`` (configuration echo plus git-style blob hashes) into the
output directory (``--out``, else ``$KCLG_OUTPUT_DIR``, else ``./kclg-out``).

Exit codes: 0 success, 1 unexpected failure, 2 invalid configuration,
3 finished with a cap or warning flag, 4 a requested check failed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import bootstrap, hydro, nongradient
from .diffusion import (
    LocalFunctionBasis,
    dirichlet_statistics,
    green_kubo_estimate,
    test_function_dirichlet,
)
from .dynamics import ModelParams, simulate
from .lattice import (
    Configuration,
    DensityProfile,
    Torus,
    Window,
    construct_blocked,
    format_snapshot,
    parse_snapshot,
    sample_product,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FLAGGED, EXIT_CHECK = 0, 1, 2, 3, 4
OUTPUT_ENV = "KCLG_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


# -- schema ---------------------------------------------------------------------

INT = {"type": "integer"}
NUM = {"type": "number"}
SITE = {"type": "array", "items": INT, "minItems": 1}

COMMON = {
    "seed": {"type": "integer", "minimum": 0},
    "workers": {"type": "integer", "minimum": 1},
    "out": {"type": "string"},
}
MODEL = {
    "d": {"type": "integer", "minimum": 1},
    "k": {"type": "integer", "minimum": 1},
    "eps": {"type": "number", "minimum": 0, "maximum": 1},
    "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
}

SPECS = {
    "simulate": (
        {**MODEL, "N": {"type": "integer", "minimum": 3}, "duration": {"type": "number", "minimum": 0},
         "epochs": {"type": "array", "items": {"type": "number", "minimum": 0}},
         "initial": {"enum": ["product", "blocked", "snapshot"]}, "snapshot": {"type": "string"},
         "scheme": {"enum": ["rejection-free", "uniformized"]},
         "max_events": {"type": ["integer", "null"], "minimum": 0}, "snapshots": {"type": "boolean"},
         "debug": {"type": "boolean"}},
        {"d": 2, "k": 2, "eps": 0.0, "rho": 0.5, "N": 32, "duration": 0.0, "epochs": [],
         "initial": "product", "scheme": "rejection-free", "max_events": None, "snapshots": False, "debug": False},
    ),
    "estimate-d": (
        {**MODEL, "basis": {"enum": ["empty", "monomials"]}, "r": {"type": "integer", "minimum": 0},
         "max_degree": {"type": "integer", "minimum": 1}, "n_samples": {"type": "integer", "minimum": 1},
         "method": {"enum": ["auto", "enumerate", "sample"]}, "n_groups": {"type": "integer", "minimum": 1},
         "eps_list": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}},
        {"d": 2, "k": 2, "eps": 0.1, "rho": 0.7, "basis": "monomials", "r": 1, "max_degree": 2,
         "n_samples": 100000, "method": "auto", "n_groups": 20},
    ),
    "test-function": (
        {**MODEL, "l": {"type": "integer", "minimum": 1}, "n_samples": {"type": "integer", "minimum": 1},
         "restricted": {"type": "boolean"}},
        {"d": 2, "k": 2, "eps": 0.0, "rho": 0.95, "l": 2, "n_samples": 100000, "restricted": True},
    ),
    "green-kubo": (
        {**MODEL, "N": {"type": "integer", "minimum": 3}, "t_max": {"type": "number", "exclusiveMinimum": 0},
         "dt": {"type": "number", "exclusiveMinimum": 0},
         "times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
         "replicas": {"type": "integer", "minimum": 1}, "n_origins": {"type": "integer", "minimum": 1},
         "burn_in": {"type": "number", "minimum": 0}},
        {"d": 2, "k": 1, "eps": 0.0, "rho": 0.5, "N": 64, "t_max": 20.0, "dt": 1.0, "replicas": 4,
         "n_origins": 1000, "burn_in": 0.0},
    ),
    "hydro": (
        {**MODEL, "N": {"type": "integer", "minimum": 3},
         "profile": {"type": "object", "additionalProperties": False, "required": ["type"],
                     "properties": {"type": {"enum": ["constant", "cosine"]}, "mean": NUM, "amplitude": NUM,
                                    "axis": {"type": "integer", "minimum": 0}}},
         "times": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
         "replicas": {"type": "integer", "minimum": 1}, "bins": {"type": "integer", "minimum": 1},
         "D": {"type": "number", "minimum": 0},
         "D_table": {"type": "object", "additionalProperties": False, "required": ["rho", "D"],
                     "properties": {"rho": {"type": "array", "items": NUM, "minItems": 1},
                                    "D": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}}},
         "initial": {"enum": ["product", "blocked"]}, "quasi_1d": {"type": "boolean"},
         "pde_resolution": {"type": ["integer", "null"], "minimum": 3}},
        {"d": 2, "k": 1, "eps": 0.0, "N": 128, "profile": {"type": "cosine", "mean": 0.5, "amplitude": 0.2, "axis": 0},
         "times": [0.05], "replicas": 16, "bins": 32, "D": 1.0, "initial": "product", "quasi_1d": True,
         "pde_resolution": None},
    ),
    "bootstrap": (
        {"snapshot": {"type": "string"}, "k": {"type": ["integer", "null"], "minimum": 1},
         "l": {"type": ["integer", "null"], "minimum": 1}},
        {"k": None, "l": None},
    ),
    "nongradient": (
        {"action": {"enum": ["witness", "current-sum", "stretch", "mobile", "reach"]},
         "d": {"type": "integer", "minimum": 1}, "k": {"type": "integer", "minimum": 1},
         "N": {"type": ["integer", "null"], "minimum": 3}, "snapshot": {"type": "string"},
         "A": {"type": "array", "items": SITE}, "e": SITE,
         "radius": {"type": ["integer", "null"], "minimum": 1}, "cap": {"type": "integer", "minimum": 1},
         "mode": {"enum": ["connected", "e-connected"]}, "max_steps": {"type": "integer", "minimum": 1}},
        {"action": "witness", "d": 2, "k": 2, "N": None, "radius": None, "cap": 1000000, "mode": "connected",
         "max_steps": 100000},
    ),
    "validate-move": (
        {"move": {"type": "string"}, "k": {"type": ["integer", "null"], "minimum": 1}},
        {"k": None},
    ),
    "validate": (
        {"paths": {"type": "array", "items": {"type": "string"}, "minItems": 1}},
        {},
    ),
}

REQUIRED = {
    "bootstrap": ["snapshot"],
    "validate-move": ["move"],
    "validate": ["paths"],
}

HELP = {
    "simulate": "run the constrained dynamics on a torus",
    "estimate-d": "variational least-squares estimate of D",
    "test-function": "Dirichlet value of the relevant-site test function",
    "green-kubo": "Green-Kubo correlation estimate of the diffusion matrix",
    "hydro": "empirical profiles under diffusive scaling versus the PDE",
    "bootstrap": "bootstrap span and relevant sites of a snapshot",
    "nongradient": "witness, current sum, e-stretch, mobile-cluster and reachability checks",
    "validate-move": "validate a multistep move (or a move family) from a JSON file",
    "validate": "re-check snapshot round-trips and manifest hashes",
}


def schema_for(command: str) -> dict:
    props, _ = SPECS[command]
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {**props, **COMMON},
        "required": REQUIRED.get(command, []),
    }


def defaults_for(command: str) -> dict:
    _, defaults = SPECS[command]
    return {"seed": 0, "workers": os.cpu_count() or 1, **json.loads(json.dumps(defaults))}


def _flag_type(prop: dict):
    t = prop.get("type")
    types = t if isinstance(t, list) else [t]
    if "array" in types or "object" in types:
        return json.loads
    if "integer" in types:
        return int
    if "number" in types:
        return float
    return str


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kclg", description="Kob-Andersen lattice gas toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SPECS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        if name == "nongradient":
            p.add_argument("action", nargs="?", choices=SPECS[name][0]["action"]["enum"])
        p.add_argument("--config", help="JSON configuration file")
        for key, prop in {**SPECS[name][0], **COMMON}.items():
            if key == "action":
                continue
            flag = "--" + key.replace("_", "-")
            if prop.get("type") == "boolean":
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None)
            else:
                p.add_argument(flag, dest=key, type=_flag_type(prop), default=None,
                               help="JSON value" if _flag_type(prop) is json.loads else None)
    return parser


def merge_config(command: str, file_cfg: dict, flags: dict) -> dict:
    cfg = defaults_for(command)
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    errors = sorted(jsonschema.Draft202012Validator(schema_for(command)).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = []
        for err in errors:
            where = ".".join(map(str, err.path)) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise ConfigError("\n".join(lines))
    return cfg


# -- outputs ----------------------------------------------------------------------

def git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


class Outputs:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hashes = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode()
        (self.dir / name).write_bytes(data)
        self.hashes[name] = git_blob_hash(data)

    def write_json(self, name: str, obj) -> None:
        self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def manifest(self, command: str, cfg: dict, status: int) -> None:
        echo = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
        body = {"subcommand": command, "config": echo, "exit_status": status,
                "outputs": dict(sorted(self.hashes.items()))}
        (self.dir / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _params(cfg: dict, rho_required: bool = True) -> ModelParams:
    try:
        return ModelParams(cfg["d"], cfg["k"], cfg.get("eps", 0.0), cfg.get("rho") if rho_required else cfg.get("rho"))
    except ValueError as exc:
        raise ConfigError(f"d/k/eps/rho: {exc}") from exc


def _rng(cfg: dict) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg["seed"]))


def _torus_snapshot(path: str) -> tuple:
    try:
        return parse_snapshot(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"snapshot: cannot read {path}: {exc}") from exc


# -- subcommands ------------------------------------------------------------------

def run_simulate(cfg, out: Outputs) -> int:
    params = _params(cfg)
    rng = _rng(cfg)
    if cfg["initial"] == "snapshot":
        if "snapshot" not in cfg:
            raise ConfigError("snapshot: required when initial is 'snapshot'")
        config, _ = _torus_snapshot(cfg["snapshot"])
        if config.geometry.d != params.d:
            raise ConfigError("snapshot: dimension differs from d")
    else:
        geom = Torus(params.d, cfg["N"])
        profile = DensityProfile.constant(params.rho, params.d)
        config = construct_blocked(geom, profile, rng) if cfg["initial"] == "blocked" else sample_product(geom, profile, rng)
    out.write("initial.snap", format_snapshot(config, params.k))
    final, stats = simulate(config, params, cfg["duration"], rng, epochs=cfg["epochs"], snapshots=cfg["snapshots"],
                            max_events=cfg["max_events"], scheme=cfg["scheme"], debug=cfg["debug"])
    out.write("final.snap", format_snapshot(final, params.k))
    out.write("trajectory.csv", stats.to_csv())
    for i, snap in enumerate(stats.snapshots):
        out.write(f"epoch_{i:04d}.snap", format_snapshot(snap, params.k))
    out.write_json("stats.json", {"elapsed": stats.elapsed, "attempted": stats.attempted,
                                  "accepted": stats.accepted, "current": stats.current.tolist(),
                                  "particles": final.n_particles})
    return EXIT_OK


def run_estimate_d(cfg, out: Outputs) -> int:
    params = _params(cfg)
    if cfg["basis"] == "empty":
        basis = LocalFunctionBasis.empty(params.d)
    else:
        basis = LocalFunctionBasis.monomials(params.d, cfg["r"], cfg["max_degree"])
    stats = dirichlet_statistics(params, basis, cfg["n_samples"], _rng(cfg), cfg["method"], cfg["n_groups"])
    eps_values = cfg.get("eps_list") or [params.eps]
    records = []
    for eps in eps_values:
        rec = stats.solve(eps).to_record()
        rec["empty_basis_value"] = stats.empty_basis_value(eps)
        records.append(rec)
    out.write_json("estimate.json", records[0] if "eps_list" not in cfg else records)
    return EXIT_OK


def run_test_function(cfg, out: Outputs) -> int:
    params = _params(cfg)
    res = test_function_dirichlet(params, cfg["l"], cfg["n_samples"], _rng(cfg), cfg["restricted"])
    out.write_json("test_function.json", res.to_record())
    return EXIT_OK


def run_green_kubo(cfg, out: Outputs) -> int:
    params = _params(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = green_kubo_estimate(params, cfg["N"], cfg["t_max"], cfg["replicas"], cfg["seed"], dt=cfg["dt"],
                                  times=cfg.get("times"), n_origins=cfg["n_origins"], burn_in=cfg["burn_in"],
                                  workers=cfg["workers"])
    out.write("green_kubo.csv", res.to_csv())
    out.write_json("green_kubo.json", res.to_record())
    return EXIT_FLAGGED if res.displacement_warning else EXIT_OK


def _profile(cfg, d) -> DensityProfile:
    prof = cfg["profile"]
    mean = prof.get("mean", cfg.get("rho", 0.5))
    if prof["type"] == "constant":
        return DensityProfile.constant(mean, d)
    amp = prof.get("amplitude", 0.1)
    axis = prof.get("axis", 0)
    if axis >= d:
        raise ConfigError("profile.axis: must be < d")
    try:
        return DensityProfile.from_function(lambda th: mean + amp * np.cos(2 * np.pi * th), cfg["N"], d, axis=axis)
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}") from exc


def run_hydro(cfg, out: Outputs) -> int:
    params = _params(cfg, rho_required=False)
    rho0 = _profile(cfg, params.d)
    if "D_table" in cfg:
        D = hydro.DiffusionTable.from_points(cfg["D_table"]["rho"], cfg["D_table"]["D"], "table")
    else:
        D = hydro.DiffusionTable.constant(cfg["D"])
    axis = cfg["profile"].get("axis", 0) if cfg["quasi_1d"] else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = hydro.run_hydro_experiment(params, cfg["N"], rho0, cfg["times"], cfg["replicas"], cfg["bins"],
                                         cfg["seed"], D, axis=axis, initial=cfg["initial"],
                                         pde_resolution=cfg["pde_resolution"], workers=cfg["workers"])
    out.write("profiles.csv", res.profiles_csv("empirical"))
    out.write("pde.csv", res.profiles_csv("pde"))
    out.write("hydro.json", res.summary_json())
    return EXIT_FLAGGED if res.warnings else EXIT_OK


def run_bootstrap(cfg, out: Outputs) -> int:
    config, k_file = _torus_snapshot(cfg["snapshot"])
    k = cfg["k"] or k_file
    occ = config.occ
    if cfg["l"] is not None:
        l = cfg["l"]
        if occ.shape[0] != 4 * l + 1:
            raise ConfigError(f"l: snapshot side {occ.shape[0]} is not 4l+1 = {4 * l + 1}")
        window_conf = Configuration(Window.box(2 * l, occ.ndim), occ)
        rel = bootstrap.relevant_sites(window_conf, l, k)
    else:
        rel = None
    res = bootstrap.span(occ == 0, None, k)
    out.write("span.snap", format_snapshot(config, k, marks=res.span))
    rec = {"k": k, "span_size": int(res.span.sum()), "n_components": res.n_components}
    if rel is not None:
        rec["l"] = cfg["l"]
        rec["relevant_count"] = int(rel.sum())
        out.write("relevant.snap", format_snapshot(config, k, marks=rel))
    out.write_json("bootstrap.json", rec)
    return EXIT_OK


def _sites(cfg, key="A"):
    if key not in cfg:
        raise ConfigError(f"{key}: required for action {cfg['action']!r}")
    return [tuple(s) for s in cfg[key]]


def run_nongradient(cfg, out: Outputs) -> int:
    action, k, d = cfg["action"], cfg["k"], cfg["d"]
    if action == "witness":
        try:
            conf, rep = nongradient.construct_witness(k, d, cfg["N"], cfg["max_steps"])
        except ValueError as exc:
            raise ConfigError(f"k/d: {exc}") from exc
        cs = nongradient.current_sum(conf, k)
        out.write("witness.snap", format_snapshot(conf, k))
        out.write_json("witness.json", {"k": k, "d": d, "N": rep.N, "moves": [list(m) for m in rep.moves],
                                        "current_sum": cs.tolist(),
                                        "leftward_allowed": len(nongradient.leftward_allowed(conf, k))})
        return EXIT_OK
    if action == "current-sum":
        if "snapshot" not in cfg:
            raise ConfigError("snapshot: required for action 'current-sum'")
        conf, _ = _torus_snapshot(cfg["snapshot"])
        out.write_json("current_sum.json", {"k": k, "current_sum": nongradient.current_sum(conf, k).tolist()})
        return EXIT_OK
    A = _sites(cfg)
    if not A:
        raise ConfigError("A: must be non-empty")
    if any(len(s) != d for s in A):
        raise ConfigError("A: every site needs d coordinates")
    if action == "stretch":
        e = tuple(cfg.get("e", [1] + [0] * (d - 1)))
        val = nongradient.e_stretch(A, e, k, cfg["radius"], cfg["cap"])
        capped = isinstance(val, nongradient.CapReached)
        out.write_json("stretch.json", {"A": [list(s) for s in A], "e": list(e), "k": k,
                                        "stretch": None if capped else val, "cap_reached": capped,
                                        "lower_bound": val.lower_bound if capped else val})
        return EXIT_FLAGGED if capped else EXIT_OK
    if action == "mobile":
        rep = nongradient.verify_mobile_cluster(A, k, cfg["radius"], cfg["cap"])

        def enc(v):
            return "cap-reached" if isinstance(v, nongradient.CapReached) else bool(v)

        out.write_json("mobile.json", {
            "A": [list(s) for s in A], "k": k,
            "translations": {",".join(map(str, z)): enc(v) for z, v in rep.translations.items()},
            "condition1": rep.condition1, "edge_coverage": rep.edge_coverage,
            "covering_shift": list(rep.covering_shift) if rep.covering_shift else None,
            "is_mobile": rep.is_mobile})
        return EXIT_FLAGGED if rep.is_mobile is None else EXIT_OK
    # reach
    win = Window.box(cfg["radius"] or max(max(map(abs, s)) for s in A) + 3, d)
    start = nongradient.configuration_empty_on(A, win)
    e = cfg.get("e") if cfg["mode"] == "e-connected" else None
    if cfg["mode"] == "e-connected" and e is None:
        raise ConfigError("e: required for mode 'e-connected'")
    rep = nongradient.reachable_configurations(start, k, cfg["mode"], e, cfg["cap"])
    rec = json.loads(rep.to_json())
    rec["reachable_sites"] = sorted(list(s) for s in rep.reachable_sites)
    out.write_json("reach.json", rec)
    return EXIT_FLAGGED if rep.cap_hit else EXIT_OK


def _load_move(path: str, k_override):
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"move: cannot read {path}: {exc}") from exc
    try:
        k = k_override or spec["k"]
        win = Window(tuple(spec["window"]["lo"]), tuple(spec["window"]["hi"]))
        seqs = []
        for item in spec["sequences"]:
            start = Configuration.from_empty_sites(win, [tuple(s) for s in item["empty"]])
            seqs.append(nongradient.MoveSequence.build(start, [(tuple(x), tuple(e)) for x, e in item["steps"]]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"move: malformed move file: {exc}") from exc
    return k, seqs


def run_validate_move(cfg, out: Outputs) -> int:
    k, seqs = _load_move(cfg["move"], cfg["k"])
    try:
        chk = (nongradient.validate_multistep_move(seqs[0], k) if len(seqs) == 1
               else nongradient.validate_move_family(seqs, k))
    except nongradient.MalformedMove as exc:
        raise ConfigError(f"move: {exc}") from exc
    out.write_json("validate_move.json", {"valid": chk.valid, "loss": chk.loss, "failed_step": chk.failed_step,
                                          "reason": chk.reason, "sequences": len(seqs)})
    return EXIT_OK if chk.valid else EXIT_CHECK


def run_validate(cfg, out: Outputs | None) -> int:
    ok = True
    for p in cfg["paths"]:
        path = Path(p)
        try:
            text = path.read_text()
        except OSError as exc:
            print(json.dumps({"path": p, "ok": False, "error": str(exc)}))
            ok = False
            continue
        if path.name == "manifest.json":
            man = json.loads(text)
            bad = [n for n, h in man.get("outputs", {}).items()
                   if not (path.parent / n).exists() or git_blob_hash((path.parent / n).read_bytes()) != h]
            print(json.dumps({"path": p, "kind": "manifest", "ok": not bad, "mismatched": bad}))
            ok &= not bad
            continue
        try:
            conf, k = parse_snapshot(text)
            same = format_snapshot(conf, k) == text
            print(json.dumps({"path": p, "kind": "snapshot", "ok": same}))
            ok &= same
        except ValueError as exc:
            print(json.dumps({"path": p, "kind": "snapshot", "ok": False, "error": str(exc)}))
            ok = False
    return EXIT_OK if ok else EXIT_CHECK


RUNNERS = {
    "simulate": run_simulate,
    "estimate-d": run_estimate_d,
    "test-function": run_test_function,
    "green-kubo": run_green_kubo,
    "hydro": run_hydro,
    "bootstrap": run_bootstrap,
    "nongradient": run_nongradient,
    "validate-move": run_validate_move,
    "validate": run_validate,
}


def run(command: str, cfg: dict) -> int:
    """Execute a validated configuration; returns the exit status."""
    if command == "validate":
        return run_validate(cfg, None)
    out = Outputs(Path(cfg.get("out") or os.environ.get(OUTPUT_ENV) or "kclg-out"))
    status = RUNNERS[command](cfg, out)
    out.manifest(command, cfg, status)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    file_cfg = {}
    try:
        if args.config:
            try:
                file_cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
            if not isinstance(file_cfg, dict):
                raise ConfigError("config: top level must be a JSON object")
        cfg = merge_config(command, file_cfg, flags)
        return run(command, cfg)
    except ConfigError as exc:
        print(f"kclg {command}: invalid configuration", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"kclg {command}: invalid configuration\n{exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
