"""Pipeline configuration: one JSON file shared by every subcommand.

Layout:

    {
      "master_seed": 42,
      "output_dir": "out",
      "paths": {"corpus": "reports.jsonl", "gold": "gold.jsonl", ...},
      "detector": {"lexicons": {...}, "min_id_digits": 7, ...},
      "surrogate": {"lexicons": {...}, "date_shift_range": [-1000, 1000], ...},
      "curate": {"ocr_threshold": 35, "metadata_allowlist": ["PatientID", ...]},
      "eval": {"policy": "exact", "temperature": 0.07, "k": [10, 50], "folds": 5}
    }

Every section is optional; a subcommand refuses to run (schema error) when
the section it needs is absent. Relative paths, including lexicon paths
inside sections, resolve against the directory containing the config file.
Named entries under "paths" must exist at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .deid_eval import MatchPolicy
from .detect import DetectorConfig
from .errors import SchemaError
from .surrogate import SurrogatePolicy

DEFAULT_OCR_THRESHOLD = 35
DEFAULT_TEMPERATURE = 0.07
DEFAULT_K = (10, 50)
DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class CurateSettings:
    ocr_threshold: int = DEFAULT_OCR_THRESHOLD
    metadata_allowlist: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.ocr_threshold < 0:
            raise ValueError("ocr_threshold must be non-negative")


@dataclass(frozen=True)
class EvalSettings:
    policy: MatchPolicy = MatchPolicy.EXACT
    temperature: float = DEFAULT_TEMPERATURE
    k: tuple[int, ...] = DEFAULT_K
    folds: int = DEFAULT_FOLDS

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if any(k < 1 for k in self.k):
            raise ValueError("k values must be at least 1")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")


@dataclass(frozen=True)
class PipelineConfig:
    base_dir: Path
    master_seed: int | None = None
    output_dir: str | None = None
    paths: dict[str, str] = field(default_factory=dict)
    detector: DetectorConfig | None = None
    surrogate: SurrogatePolicy | None = None
    curate: CurateSettings = field(default_factory=CurateSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)

    def path(self, name: str) -> str:
        if name not in self.paths:
            raise SchemaError(f"config has no path named {name!r}")
        return self.paths[name]

    def require_detector(self) -> DetectorConfig:
        if self.detector is None:
            raise SchemaError("config has no 'detector' section")
        return self.detector

    def require_surrogate(self) -> SurrogatePolicy:
        if self.surrogate is None:
            raise SchemaError("config has no 'surrogate' section")
        return self.surrogate


def load_config(path: str, master_seed: int | None = None) -> PipelineConfig:
    """Parse and validate a pipeline config; --seed overrides the file's seed."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    base = Path(path).parent

    seed = master_seed if master_seed is not None else raw.get("master_seed")
    if seed is not None:
        seed = int(seed)

    paths: dict[str, str] = {}
    for name, rel in raw.get("paths", {}).items():
        resolved = base / str(rel)
        if not resolved.exists():
            raise SchemaError(f"{path}: paths.{name} does not exist: {resolved}")
        paths[str(name)] = str(resolved)

    output_dir = raw.get("output_dir")
    if output_dir is not None:
        output_dir = str(base / str(output_dir))

    detector = None
    if "detector" in raw:
        detector = DetectorConfig.from_obj(raw["detector"], base=base, where=f"{path}#detector")

    surrogate = None
    if "surrogate" in raw:
        surrogate = SurrogatePolicy.from_obj(
            raw["surrogate"], base=base, where=f"{path}#surrogate", master_seed=seed
        )

    curate_raw = raw.get("curate", {})
    if not isinstance(curate_raw, dict):
        raise SchemaError(f"{path}: 'curate' must be an object")
    try:
        curate = CurateSettings(
            ocr_threshold=int(curate_raw.get("ocr_threshold", DEFAULT_OCR_THRESHOLD)),
            metadata_allowlist=tuple(str(k) for k in curate_raw.get("metadata_allowlist", [])),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad 'curate' section: {exc}") from exc

    eval_raw = raw.get("eval", {})
    if not isinstance(eval_raw, dict):
        raise SchemaError(f"{path}: 'eval' must be an object")
    try:
        eval_settings = EvalSettings(
            policy=MatchPolicy(eval_raw.get("policy", "exact")),
            temperature=float(eval_raw.get("temperature", DEFAULT_TEMPERATURE)),
            k=tuple(int(k) for k in eval_raw.get("k", DEFAULT_K)),
            folds=int(eval_raw.get("folds", DEFAULT_FOLDS)),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad 'eval' section: {exc}") from exc

    return PipelineConfig(
        base_dir=base,
        master_seed=seed,
        output_dir=output_dir,
        paths=paths,
        detector=detector,
        surrogate=surrogate,
        curate=curate,
        eval=eval_settings,
    )
