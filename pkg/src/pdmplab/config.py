"""Experiment configuration: JSON document -> validated runtime objects.

States are 1-based in the JSON (matching field labels and output files)
and converted to 0-based indices internally.  Parsing is strict: every
problem is reported as a ConfigError naming the offending key.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .pdmp import Box, PdmpConfig
from .switching import RateMatrixError, scale, validate_rate_matrix
from .vecfield import VectorFieldSpec, affine_field, expression_field
from .exprparse import ExprSyntaxError

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config",
           "config_hash", "SEED_ENV_VAR"]

SEED_ENV_VAR = "PDMP_LAB_SEED"


class ConfigError(ValueError):
    pass


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    pdmp: PdmpConfig
    lam: float
    raw: dict
    hash: str
    density_block: dict = field(default_factory=dict)
    gamma_block: dict | None = None
    hormander_block: dict | None = None
    submersion_block: dict | None = None
    lambda_list: tuple[float, ...] = ()

    def scaled(self, lam: float) -> "ExperimentConfig":
        """Same experiment with the jump rates rescaled (base Q times lam)."""
        base_Q = validate_rate_matrix(np.asarray(self.raw["Q"], dtype=float))
        from dataclasses import replace
        pdmp = replace(self.pdmp, Q=scale(base_Q, lam) if lam != 1.0 else base_Q)
        return ExperimentConfig(
            pdmp=pdmp, lam=lam, raw=self.raw, hash=self.hash,
            density_block=self.density_block, gamma_block=self.gamma_block,
            hormander_block=self.hormander_block,
            submersion_block=self.submersion_block,
            lambda_list=self.lambda_list,
        )


def _need(doc, key, typ, where="config"):
    if key not in doc:
        raise ConfigError(f"{where}: missing required key '{key}'")
    val = doc[key]
    if typ is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if typ is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if not isinstance(val, typ):
        raise ConfigError(f"{where}: key '{key}' has wrong type "
                          f"(expected {typ.__name__})")
    return val


def _parse_field(entry, dim, k) -> VectorFieldSpec:
    where = f"fields[{k}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: must be an object")
    label = _need(entry, "label", int, where)
    kind = _need(entry, "kind", str, where)
    if kind == "affine":
        A = np.asarray(_need(entry, "A", list, where), dtype=float)
        b = np.asarray(entry.get("b", [0.0] * dim), dtype=float)
        if A.shape != (dim, dim):
            raise ConfigError(f"{where}: A must be {dim}x{dim}")
        if b.shape != (dim,):
            raise ConfigError(f"{where}: b must have length {dim}")
        return affine_field(A, b, label=label)
    if kind == "expression":
        comps = _need(entry, "components", list, where)
        if len(comps) != dim:
            raise ConfigError(f"{where}: need {dim} components")
        try:
            return expression_field(comps, dim, label=label)
        except (ExprSyntaxError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown kind '{kind}' (affine | expression)")


def _parse_state(doc, key, n, where="config") -> int:
    val = _need(doc, key, int, where)
    if not 1 <= val <= n:
        raise ConfigError(f"{where}: state '{key}'={val} out of range 1..{n}")
    return val - 1


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    dim = _need(doc, "dimension", int)
    if dim < 1:
        raise ConfigError("dimension must be at least 1")

    raw_fields = _need(doc, "fields", list)
    if not raw_fields:
        raise ConfigError("fields: must not be empty")
    fields = tuple(_parse_field(e, dim, k) for k, e in enumerate(raw_fields))
    labels = [f.label for f in fields]
    if labels != list(range(1, len(fields) + 1)):
        raise ConfigError("fields: labels must be 1..n in order")

    try:
        Q = validate_rate_matrix(np.asarray(_need(doc, "Q", list), dtype=float))
    except RateMatrixError as exc:
        raise ConfigError(f"Q: {exc}") from exc
    if Q.n != len(fields):
        raise ConfigError(f"Q is {Q.n}x{Q.n} but there are {len(fields)} fields")

    lam = float(doc.get("lambda", 1.0))
    if lam <= 0:
        raise ConfigError("lambda must be positive")
    Q_run = scale(Q, lam) if lam != 1.0 else Q

    box_raw = np.asarray(_need(doc, "box", list), dtype=float)
    if box_raw.shape != (dim, 2):
        raise ConfigError(f"box: must be {dim} pairs [lo, hi]")
    box = Box.make(box_raw)

    x0 = np.asarray(_need(doc, "x0", list), dtype=float)
    if x0.shape != (dim,):
        raise ConfigError(f"x0: must have length {dim}")
    if not box.contains(x0):
        raise ConfigError("x0: lies outside the box")
    i0 = _parse_state(doc, "i0", Q.n)

    horizon = _need(doc, "horizon", float)
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    burn_in = doc.get("burn_in")
    if burn_in is not None:
        burn_in = float(burn_in)
        if burn_in < 0 or burn_in >= horizon:
            raise ConfigError("burn_in must lie in [0, horizon)")
    step = float(doc.get("step", 1e-3))
    if step <= 0:
        raise ConfigError("step must be positive")

    seed = doc.get("seed")
    if seed is None:
        seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")

    pdmp = PdmpConfig(
        fields=fields, Q=Q_run, box=box, x0=x0, i0=i0,
        horizon=horizon, burn_in=burn_in, step=step, seed=seed,
    )

    density_block = doc.get("density", {})
    if not isinstance(density_block, dict):
        raise ConfigError("density: must be an object")

    gamma_block = doc.get("gamma")
    if gamma_block is not None:
        where = "gamma"
        if not isinstance(gamma_block, dict):
            raise ConfigError(f"{where}: must be an object")
        pts = np.atleast_2d(np.asarray(_need(gamma_block, "points", list, where),
                                       dtype=float))
        if pts.shape[1] != dim:
            raise ConfigError(f"{where}: points must have dimension {dim}")
        gamma_block = dict(gamma_block)
        gamma_block["points"] = pts
        gamma_block["state"] = _parse_state(gamma_block, "state", Q.n, where)
        radii = gamma_block.get("radii", [0.2, 0.1, 0.05, 0.025])
        if len(radii) < 4:
            raise ConfigError(f"{where}: need at least 4 radii")
        gamma_block["radii"] = [float(r) for r in radii]

    hormander_block = doc.get("hormander")
    if hormander_block is not None:
        where = "hormander"
        if not isinstance(hormander_block, dict):
            raise ConfigError(f"{where}: must be an object")
        hormander_block = dict(hormander_block)
        pts = np.atleast_2d(np.asarray(_need(hormander_block, "points", list, where),
                                       dtype=float))
        if pts.shape[1] != dim:
            raise ConfigError(f"{where}: points must have dimension {dim}")
        hormander_block["points"] = pts

    submersion_block = doc.get("submersion")
    if submersion_block is not None:
        where = "submersion"
        if not isinstance(submersion_block, dict):
            raise ConfigError(f"{where}: must be an object")
        submersion_block = dict(submersion_block)
        xi = _need(submersion_block, "xi", list, where)
        for s in xi:
            if not isinstance(s, int) or not 1 <= s <= Q.n:
                raise ConfigError(f"{where}: xi states must be in 1..{Q.n}")
        submersion_block["xi"] = [s - 1 for s in xi]

    lambda_list = tuple(float(v) for v in doc.get("lambda_list", []))
    if any(v <= 0 for v in lambda_list):
        raise ConfigError("lambda_list entries must be positive")

    return ExperimentConfig(
        pdmp=pdmp, lam=lam, raw=doc, hash=config_hash(doc),
        density_block=density_block, gamma_block=gamma_block,
        hormander_block=hormander_block, submersion_block=submersion_block,
        lambda_list=lambda_list,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(doc)
