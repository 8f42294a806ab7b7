"""End-to-end experiment pipeline: generate a state, push it through the
detector model, simulate sampling, reconstruct, and emit plot-ready data.

An experiment is described by a single JSON config; bundled configs under
``pnrecon/configs`` encode the four reference pipelines (thermal, photon-
added thermal, the direct-inversion baseline, and the even superposition
with the parity mask). Every output file embeds provenance: the hash of
the effective config, the seed, the generator name and the package
version.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import distio, states
from .detector import DetectorParams, build_response, forward, suggest_m_max
from .inversion import direct_reconstruct
from .landweber import ConstraintSet, LandweberConfig, solve
from .metrics import normalization_defect, relative_error, relative_residual
from .sampling import GENERATOR_NAME, SamplingConfig, expected_sampling_error, sample_counts

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "run_experiment",
    "bundled_config_names",
    "load_config",
]

_STATE_BUILDERS = {
    "thermal": lambda args: states.thermal(
        args["mean_n"], args.get("tail", 1e-10)
    ),
    "spats": lambda args: states.spats(args["mean_n"], args.get("tail", 1e-10)),
    "even_cat": lambda args: states.even_cat(
        args["alpha_sq"], args.get("tail", 1e-10)
    ),
    "fock": lambda args: states.fock(args["n"]),
    "file": lambda args: states.from_file(args["path"]),
}


class ConfigError(ValueError):
    """An experiment config is missing, malformed, or inconsistent."""


@contextmanager
def _stage(name: str):
    """Tag exceptions with the pipeline stage they came from."""
    try:
        yield
    except Exception as exc:
        detail = exc.args[0] if exc.args else str(exc)
        exc.args = (f"[stage: {name}] {detail}",) + tuple(exc.args[1:])
        raise


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; ``raw`` is the effective config
    dict (seed already resolved) that provenance hashes are taken over."""

    name: str
    state: dict
    detector_true: DetectorParams
    detector_assumed: DetectorParams
    sampling: SamplingConfig | None
    solver: dict
    support: object
    window_tail: float
    m_max: int | None
    direct_inversion: bool
    raw: dict

    @classmethod
    def from_dict(cls, payload: dict, seed=None) -> "ExperimentConfig":
        if not isinstance(payload, dict):
            raise ConfigError("config must be a JSON object")
        data = json.loads(json.dumps(payload))  # deep copy, JSON-clean
        try:
            state = dict(data["state"])
            kind = state.get("kind")
            if kind not in _STATE_BUILDERS:
                raise ConfigError(
                    f"unknown state kind {kind!r}; expected one of "
                    f"{sorted(_STATE_BUILDERS)}"
                )
            det_true = DetectorParams(**data["detector_true"])
            det_assumed = DetectorParams(**data["detector_assumed"])
            if data.get("sampling") is None:
                # exact-forward pipeline: the solver sees noise-free counts
                if seed is not None:
                    raise ConfigError(
                        "config has no sampling stage; a seed override "
                        "is not applicable"
                    )
                sampling = None
                data["sampling"] = None
            else:
                sampling_args = dict(data["sampling"])
                if seed is not None:
                    sampling_args["seed"] = int(seed)
                    data["sampling"] = sampling_args
                sampling = SamplingConfig(**sampling_args)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        solver = dict(data.get("solver", {}))
        support = data.get("constraints", {}).get("support")
        window_tail = float(data.get("window_tail", 1e-10))
        if not (0.0 < window_tail < 1.0):
            raise ConfigError(f"window_tail must be in (0, 1), got {window_tail}")
        m_max = data.get("m_max")
        if m_max is not None:
            m_max = int(m_max)
            if m_max < 0:
                raise ConfigError("m_max must be nonnegative")
        return cls(
            name=str(data.get("name", "experiment")),
            state=state,
            detector_true=det_true,
            detector_assumed=det_assumed,
            sampling=sampling,
            solver=solver,
            support=support,
            window_tail=window_tail,
            m_max=m_max,
            direct_inversion=bool(data.get("direct_inversion", False)),
            raw=data,
        )

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def solver_config(self, noise_level: float) -> LandweberConfig:
        options = self.solver
        explicit = options.get("noise_level")
        try:
            return LandweberConfig(
                chi=options.get("chi"),
                max_iterations=int(options.get("max_iterations", 100_000)),
                discrepancy_tau=float(options.get("discrepancy_tau", 1.1)),
                noise_level=float(
                    noise_level if explicit is None else explicit
                ),
                stagnation_tol=float(options.get("stagnation_tol", 1e-9)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid solver config: {exc}") from exc

    def constraint_set(self, size: int) -> ConstraintSet:
        if self.support is None:
            return ConstraintSet.nonnegative()
        if self.support == "even":
            return ConstraintSet.even_support(size)
        if isinstance(self.support, list):
            mask = np.zeros(size, dtype=bool)
            try:
                mask[np.asarray(self.support, dtype=int)] = True
            except (IndexError, ValueError) as exc:
                raise ConfigError(f"invalid support list: {exc}") from exc
            return ConstraintSet(mask)
        raise ConfigError(f"unsupported constraints.support {self.support!r}")


def bundled_config_names() -> list[str]:
    root = resources.files("pnrecon").joinpath("configs")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(ref, seed=None) -> ExperimentConfig:
    """Load a config from a path, or by bundled name (e.g. thermal_fig1)."""
    path = Path(ref)
    if not path.exists():
        candidate = resources.files("pnrecon").joinpath(f"configs/{ref}.json")
        if candidate.is_file():
            payload = json.loads(candidate.read_text(encoding="utf-8"))
            return ExperimentConfig.from_dict(payload, seed=seed)
        raise ConfigError(
            f"no config file {ref!r} and no bundled config of that name "
            f"(available: {', '.join(bundled_config_names())})"
        )
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {ref!r}: {exc}") from exc
    return ExperimentConfig.from_dict(payload, seed=seed)


def run_experiment(config: ExperimentConfig, output_dir) -> dict:
    """Execute the full pipeline and write the result files.

    Writes into ``output_dir``: the true photon distribution, true and
    empirical count distributions, the reconstruction, the solver report,
    the error report, a plot-data table, and (when configured) the raw
    direct-inversion estimate. Returns a summary dict with the headline
    metrics and file paths.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {
        "config_sha256": config.config_hash(),
        "seed": config.sampling.seed if config.sampling else None,
        "generator": GENERATOR_NAME if config.sampling else None,
        "package": f"pnrecon {__version__}",
    }

    with _stage("state"):
        photon = _STATE_BUILDERS[config.state["kind"]](config.state)
        photon.validate()
    with _stage("detector"):
        n_max = photon.n_max
        m_max = config.m_max
        if m_max is None:
            m_max = suggest_m_max(config.detector_true, n_max, config.window_tail)
        mat_true = build_response(config.detector_true, n_max, m_max)
        counts_true = forward(mat_true, photon)
    with _stage("sampling"):
        if config.sampling is None:
            counts_emp = counts_true
            delta_data = 0.0
            noise_level = 0.0
        else:
            counts_emp = sample_counts(counts_true, config.sampling)
            delta_data = relative_error(counts_emp.probs, counts_true.probs)
            noise_level = expected_sampling_error(
                counts_emp, config.sampling.events
            )
    with _stage("reconstruction"):
        mat_assumed = build_response(config.detector_assumed, n_max, m_max)
        constraints = config.constraint_set(n_max + 1)
        report = solve(
            mat_assumed,
            counts_emp,
            constraints,
            config.solver_config(noise_level),
        )
    with _stage("metrics"):
        delta_est = relative_error(report.estimate, photon.probs)
        delta_res = relative_residual(mat_assumed, report.estimate, counts_emp)
        defect = normalization_defect(report.estimate)

    direct_error = None
    if config.direct_inversion:
        with _stage("direct-inversion"):
            raw = direct_reconstruct(config.detector_assumed, counts_emp, n_max)
            direct_error = relative_error(raw, photon.probs)
            distio.write_distribution(
                out / "direct_estimate.json",
                raw,
                metadata={
                    "relative_error": direct_error,
                    "provenance": provenance,
                },
            )

    with _stage("output"):
        distio.write_distribution(
            out / "photon_true.json",
            photon.probs,
            metadata={
                "state": config.state,
                "truncation_tail": photon.truncation_tail,
                "provenance": provenance,
            },
        )
        distio.write_distribution(
            out / "counts_true.json",
            counts_true.probs,
            metadata={
                "eta": config.detector_true.eta,
                "n_noise": config.detector_true.n_noise,
                "provenance": provenance,
            },
        )
        distio.write_distribution(
            out / "counts_empirical.json",
            counts_emp.probs,
            metadata={
                "nu": config.sampling.events if config.sampling else None,
                "seed": config.sampling.seed if config.sampling else None,
                "generator": GENERATOR_NAME if config.sampling else None,
                "provenance": provenance,
            },
        )
        distio.write_distribution(
            out / "estimate.json",
            report.estimate,
            metadata={
                "eta": config.detector_assumed.eta,
                "n_noise": config.detector_assumed.n_noise,
                "provenance": provenance,
            },
        )
        distio.write_json(
            out / "solve_report.json",
            {
                "estimate": report.estimate,
                "iterations_run": report.iterations_run,
                "stop_reason": report.stop_reason,
                "chi": report.chi,
                "residual_history": report.residual_history,
                "normalization_history": report.normalization_history,
                "provenance": provenance,
            },
        )
        error_payload = {
            "relative_error": delta_est,
            "relative_residual": delta_res,
            "normalization_defect": defect,
            "sampling_relative_error": delta_data,
            "noise_level": noise_level,
            "provenance": provenance,
        }
        if direct_error is not None:
            error_payload["direct_relative_error"] = direct_error
        distio.write_json(out / "error_report.json", error_payload)
        distio.write_plot_table(
            out / "plot_data.csv",
            {
                "p_true": photon.probs,
                "p_reconstructed": report.estimate,
                "P_simulated": counts_emp.probs,
            },
        )

    summary = {
        "name": config.name,
        "output_dir": str(out),
        "n_max": n_max,
        "m_max": m_max,
        "iterations_run": report.iterations_run,
        "stop_reason": report.stop_reason,
        "sampling_relative_error": delta_data,
        "relative_error": delta_est,
        "relative_residual": delta_res,
        "normalization_defect": defect,
    }
    if direct_error is not None:
        summary["direct_relative_error"] = direct_error
    return summary
