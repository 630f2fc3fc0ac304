"""Session configuration and the results bundle.

Config files are JSON with a ``res`` and a ``sim`` section and an optional
``solver`` section. Keys may be written with the Greek symbols used in the
LLE literature or with their Latin names.

A results bundle is a zip file holding ``manifest.json`` and one raw
little-endian array per dataset under ``data/<name>.bin``. Complex arrays are
stored as float64 with a trailing ``(re, im)`` axis of length 2. Bundles are
written deterministically, so saving the same content twice yields the same
bytes.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
import unicodedata
import zipfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dispersion import DispersionProfile
from .errors import (
    ConflictingAlias,
    ConfigError,
    CorruptBundle,
    IoFailure,
    MissingRequired,
    UnknownKey,
    VersionMismatch,
)
from .lle import EvolutionRecord, ResonatorSpec, SimulationPlan, SimulationSpec
from .steady import SteadySolution

__all__ = [
    "FORMAT_VERSION",
    "SolverControls",
    "SessionConfig",
    "load_config",
    "config_from_dict",
    "save_config",
    "save_results",
    "load_results",
    "read_manifest",
]

FORMAT_VERSION = 1

_ALIASES = {
    "res": {"γ": "gamma"},
    "sim": {
        "δω_init": "domega_init",
        "δω_end": "domega_end",
        "δω_stop": "domega_stop",
        "δω": "domega",
        "μ_sim": "mu_sim",
        "μ_fit": "mu_fit",
    },
    "solver": {},
}
_KEYS = {
    "res": {"R", "Qi", "Qc", "gamma", "dispfile"},
    "sim": {"Pin", "Tscan", "f_pmp", "domega_init", "domega_end", "domega_stop", "domega",
            "mu_sim", "mu_fit", "num_probe", "seed"},
    "solver": {"tol", "maxiter", "step_factor"},
}
_REQUIRED = {
    "res": ("R", "Qi", "Qc", "gamma", "dispfile"),
    "sim": ("Pin", "Tscan", "f_pmp", "domega_init", "domega_end", "mu_sim", "mu_fit"),
    "solver": (),
}


@dataclass(frozen=True)
class SolverControls:
    tol: float = 1e-3
    maxiter: int = 6
    step_factor: float = 0.1


@dataclass(frozen=True)
class SessionConfig:
    res: ResonatorSpec
    sim: SimulationSpec
    solver: SolverControls = field(default_factory=SolverControls)

    def to_dict(self):
        sim = asdict(self.sim)
        sim["mu_sim"] = list(sim["mu_sim"])
        sim["mu_fit"] = list(sim["mu_fit"])
        return {"res": asdict(self.res), "sim": sim, "solver": asdict(self.solver)}


def _canonical_key(key):
    # folds the micro sign onto Greek mu, among others
    return unicodedata.normalize("NFKC", key)


def _resolve_section(name, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    aliases = {_canonical_key(k): v for k, v in _ALIASES[name].items()}
    out, origin = {}, {}
    for key, value in raw.items():
        canon = aliases.get(_canonical_key(key), _canonical_key(key))
        if canon not in _KEYS[name]:
            raise UnknownKey(f"unknown key {key!r} in section {name!r}")
        if canon in out and out[canon] != value:
            raise ConflictingAlias(
                f"{origin[canon]!r}={out[canon]!r} conflicts with {key!r}={value!r} in section {name!r}"
            )
        out[canon] = value
        origin.setdefault(canon, key)
    missing = [k for k in _REQUIRED[name] if k not in out]
    if missing:
        raise MissingRequired(f"section {name!r} is missing {', '.join(missing)}")
    return out


def config_from_dict(data, base_dir=None):
    """Build a :class:`SessionConfig` from parsed JSON.

    A relative ``dispfile`` is resolved against ``base_dir`` when given.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key in data:
        if key not in _KEYS:
            raise UnknownKey(f"unknown top-level key {key!r}")
    for key in ("res", "sim"):
        if key not in data:
            raise MissingRequired(f"missing section {key!r}")
    res = _resolve_section("res", data["res"])
    sim = _resolve_section("sim", data["sim"])
    solver = _resolve_section("solver", data.get("solver", {}))

    dispfile = res["dispfile"]
    if base_dir is not None and dispfile is not None and not os.path.isabs(dispfile):
        res["dispfile"] = str(Path(base_dir) / dispfile)
    try:
        return SessionConfig(
            res=ResonatorSpec(**res),
            sim=SimulationSpec(**sim),
            solver=SolverControls(**solver),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def save_config(config, path):
    _atomic_write(Path(path), json.dumps(config.to_dict(), indent=2, ensure_ascii=False).encode("utf-8"))


# -- bundles ------------------------------------------------------------------

_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _atomic_write(path, payload):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _encode(arr):
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
    if arr.dtype == np.bool_:
        arr = arr.astype("u1")
    elif arr.dtype.kind == "i":
        arr = arr.astype("<i8")
    elif arr.dtype.kind == "f":
        arr = arr.astype("<f8")
    else:
        raise TypeError(f"unsupported dtype {arr.dtype}")
    return np.ascontiguousarray(arr)


def _plan_meta(plan):
    prof = plan.profile
    return {
        "t_r": plan.t_r,
        "alpha_l": plan.alpha_l,
        "theta": plan.theta,
        "kerr_coeff": plan.kerr_coeff,
        "pump_amp": plan.pump_amp,
        "domega_init": plan.domega_init,
        "domega_end": plan.domega_end,
        "domega_stop": plan.domega_stop,
        "total_steps": plan.total_steps,
        "tol": plan.tol,
        "maxiter": plan.maxiter,
        "step_factor": plan.step_factor,
        "num_probe": plan.num_probe,
        "seed": plan.seed,
        "profile": {
            "d1": prof.d1,
            "omega0": prof.omega0,
            "m0": prof.m0,
            "neff_pmp": prof.neff_pmp,
            "ng_pmp": prof.ng_pmp,
            "fit_window": list(prof.fit_window),
        },
    }


def _plan_datasets(plan):
    prof = plan.profile
    return {
        "mu_grid": prof.mu_grid,
        "dint": prof.dint,
        "extrapolated_mask": prof.extrapolated_mask,
    }


def save_results(result, path, config=None):
    """Write an :class:`EvolutionRecord` or :class:`SteadySolution` bundle atomically."""
    if isinstance(result, EvolutionRecord):
        kind = "temporal"
        plan = result.plan
        datasets = {
            "snapshots": result.snapshots,
            "detuning_trace": result.detuning_trace,
            "comb_power_trace": result.comb_power_trace,
            "snapshot_steps": result.steps,
        }
        extra = {"status": result.status, "diagnostic": result.diagnostic}
    elif isinstance(result, SteadySolution):
        kind = "steady"
        plan = result.plan
        datasets = {"steady_modal": result.modal}
        extra = {
            "residual_norm": result.residual_norm,
            "iterations": result.iterations,
            "detuning": result.detuning,
            "converged": result.converged,
        }
    else:
        raise TypeError(f"cannot save {type(result).__name__}")
    if plan is None:
        raise ValueError("result carries no plan")
    datasets = {**_plan_datasets(plan), **datasets}

    encoded = {name: _encode(arr) for name, arr in datasets.items()}
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config.to_dict() if config is not None else None,
        "plan": _plan_meta(plan),
        "result": extra,
        "datasets": {
            name: {"dtype": arr.dtype.str, "shape": list(arr.shape), "byte_length": arr.nbytes}
            for name, arr in encoded.items()
        },
    }

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        def put(name, payload):
            info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
            info.external_attr = 0o644 << 16
            zf.writestr(info, payload)

        put("manifest.json", json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False).encode("utf-8"))
        for name in sorted(encoded):
            put(f"data/{name}.bin", encoded[name].tobytes())
    _atomic_write(Path(path), buf.getvalue())
    return manifest


def read_manifest(path):
    try:
        with zipfile.ZipFile(path) as zf:
            return json.loads(zf.read("manifest.json"))
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise CorruptBundle(f"{path}: unreadable manifest ({exc})") from exc


def _read_arrays(path):
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, OSError) as exc:
        raise CorruptBundle(f"{path}: not a readable bundle ({exc})") from exc
    with zf:
        try:
            manifest = json.loads(zf.read("manifest.json"))
        except (KeyError, json.JSONDecodeError) as exc:
            raise CorruptBundle(f"{path}: unreadable manifest ({exc})") from exc
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"{path}: format_version {version!r}, expected {FORMAT_VERSION}")
        arrays = {}
        for name, meta in manifest.get("datasets", {}).items():
            member = f"data/{name}.bin"
            try:
                raw = zf.read(member)
            except KeyError:
                raise CorruptBundle(f"{path}: dataset {name!r} is missing") from None
            except (zipfile.BadZipFile, OSError) as exc:
                raise CorruptBundle(f"{path}: dataset {name!r} unreadable ({exc})") from exc
            dtype = np.dtype(meta["dtype"])
            shape = tuple(meta["shape"])
            expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            if len(raw) != meta["byte_length"] or len(raw) != expected:
                raise CorruptBundle(
                    f"{path}: dataset {name!r} has {len(raw)} bytes, expected {meta['byte_length']}"
                )
            arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return manifest, arrays


def _complex(arr):
    return arr[..., 0] + 1j * arr[..., 1]


def _rebuild_plan(meta, arrays):
    p = meta["profile"]
    profile = DispersionProfile(
        mu_grid=arrays["mu_grid"].astype(np.int64),
        dint=arrays["dint"],
        d1=p["d1"],
        omega0=p["omega0"],
        m0=p["m0"],
        neff_pmp=p["neff_pmp"],
        ng_pmp=p["ng_pmp"],
        fit_window=tuple(p["fit_window"]),
        extrapolated_mask=arrays["extrapolated_mask"].astype(bool),
    )
    fields = {k: v for k, v in meta.items() if k != "profile"}
    return SimulationPlan(profile=profile, **fields)


def load_results(path):
    """Read a bundle back into an :class:`EvolutionRecord` or :class:`SteadySolution`."""
    manifest, arrays = _read_arrays(path)
    try:
        plan = _rebuild_plan(manifest["plan"], arrays)
        extra = manifest["result"]
        if manifest["kind"] == "temporal":
            return EvolutionRecord(
                snapshots=_complex(arrays["snapshots"]),
                detuning_trace=arrays["detuning_trace"],
                comb_power_trace=arrays["comb_power_trace"],
                steps=arrays["snapshot_steps"],
                plan=plan,
                status=extra["status"],
                diagnostic=extra["diagnostic"],
            )
        if manifest["kind"] == "steady":
            return SteadySolution(
                modal=_complex(arrays["steady_modal"]),
                residual_norm=extra["residual_norm"],
                iterations=extra["iterations"],
                detuning=extra["detuning"],
                converged=extra["converged"],
                plan=plan,
            )
    except KeyError as exc:
        raise CorruptBundle(f"{path}: missing entry {exc}") from exc
    raise CorruptBundle(f"{path}: unknown bundle kind {manifest.get('kind')!r}")
