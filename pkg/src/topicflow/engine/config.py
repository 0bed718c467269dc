"""Engine configuration: one YAML file anchoring a bot directory.

Relative paths inside the file resolve against the file's own directory,
so a bot ships as a self-contained folder (config + dialogues + topics +
data) that can be moved around freely.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from topicflow.errors import ConfigurationError
from topicflow.hcn.model import HcnHyperparams
from topicflow.nlu.entity import EntityConfig
from topicflow.switch.model import SwitchConfig

DEFAULT_RECOMMENDATION_PROMPT = "What would you like to talk about?"

_TOP_KEYS = {
    "models", "state", "topics", "dialogues", "content", "hooks",
    "embeddings", "embed_dim", "seed", "switch_threshold",
    "paraphrase_probability", "decay", "mix_rate", "trivia_cap",
    "initial_topic", "recommendation_prompt", "http", "data", "hcn",
    "switch", "entity", "top_k",
}


@dataclass(frozen=True)
class DataPaths:
    """Training data locations; entity types name the span labels."""

    intents: Path
    entities: Path
    entity_types: tuple[str, ...]
    acts: Path | None = None
    sentiment: Path | None = None


@dataclass(frozen=True)
class EngineConfig:
    root: Path
    models: Path
    state: Path
    topics: Path
    dialogues: Path
    data: DataPaths
    content: Path | None = None
    hooks: Path | None = None
    embeddings: Path | None = None
    embed_dim: int = 24
    seed: int = 0
    switch_threshold: float = 0.5
    paraphrase_probability: float = 0.5
    decay: float = 0.5
    mix_rate: float = 0.3
    trivia_cap: int = 1
    initial_topic: str = "InitialChat"
    recommendation_prompt: str = DEFAULT_RECOMMENDATION_PROMPT
    host: str = "127.0.0.1"
    port: int = 8080
    top_k: int = 5
    hcn: HcnHyperparams = field(default_factory=HcnHyperparams)
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    entity: EntityConfig = field(default_factory=EntityConfig)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


def _probability(raw, key: str) -> float:
    _require(isinstance(raw, (int, float)) and not isinstance(raw, bool),
             f"{key} must be a number, got {raw!r}")
    value = float(raw)
    _require(0.0 <= value <= 1.0, f"{key} must be within [0, 1], got {value}")
    return value


def _path(root: Path, raw, key: str) -> Path:
    _require(isinstance(raw, str) and raw.strip() != "",
             f"{key} must be a non-empty path")
    candidate = Path(raw)
    return candidate if candidate.is_absolute() else root / candidate


def _existing(root: Path, raw, key: str) -> Path:
    resolved = _path(root, raw, key)
    _require(resolved.exists(), f"{key} path does not exist: {resolved}")
    return resolved


def _section(raw, key: str) -> dict:
    if raw is None:
        return {}
    _require(isinstance(raw, dict), f"{key} must be a mapping")
    return dict(raw)


def _hyper_section(raw, key: str, defaults):
    """Overlays a YAML mapping onto a hyperparameter dataclass."""
    section = _section(raw, key)
    known = {f.name for f in dataclasses.fields(defaults)}
    unknown = set(section) - known
    _require(not unknown, f"{key}: unknown keys {sorted(unknown)}")
    for name in ("conv_widths", "widths"):
        if isinstance(section.get(name), list):
            section[name] = tuple(section[name])
    return dataclasses.replace(defaults, **section)


def load_engine_config(path: str | Path) -> EngineConfig:
    """Parses and validates one bot configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML ({exc})") from exc
    _require(isinstance(raw, dict), f"{path}: top level must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"{path}: unknown keys {sorted(unknown)}")

    root = path.parent.resolve()
    topics = _existing(root, raw.get("topics", "topics"), "topics")
    dialogues = _existing(root, raw.get("dialogues", "dialogues"), "dialogues")
    _require(topics.is_dir(), f"topics must be a directory: {topics}")
    _require(dialogues.is_dir(), f"dialogues must be a directory: {dialogues}")

    data_raw = _section(raw.get("data"), "data")
    unknown = set(data_raw) - {"intents", "entities", "entity_types", "acts",
                               "sentiment"}
    _require(not unknown, f"data: unknown keys {sorted(unknown)}")
    _require("intents" in data_raw and "entities" in data_raw,
             "data needs intents and entities paths")
    types = data_raw.get("entity_types")
    _require(isinstance(types, list) and types
             and all(isinstance(t, str) for t in types),
             "data.entity_types must be a non-empty list of strings")
    data = DataPaths(
        intents=_existing(root, data_raw["intents"], "data.intents"),
        entities=_existing(root, data_raw["entities"], "data.entities"),
        entity_types=tuple(types),
        acts=(_existing(root, data_raw["acts"], "data.acts")
              if data_raw.get("acts") else None),
        sentiment=(_existing(root, data_raw["sentiment"], "data.sentiment")
                   if data_raw.get("sentiment") else None),
    )

    http = _section(raw.get("http"), "http")
    unknown = set(http) - {"host", "port"}
    _require(not unknown, f"http: unknown keys {sorted(unknown)}")
    port = http.get("port", 8080)
    _require(isinstance(port, int) and 0 <= port <= 65535,
             f"http.port must be a port number, got {port!r}")

    embed_dim = raw.get("embed_dim", 24)
    _require(isinstance(embed_dim, int) and embed_dim > 0,
             f"embed_dim must be a positive integer, got {embed_dim!r}")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and seed >= 0,
             f"seed must be a non-negative integer, got {seed!r}")
    trivia_cap = raw.get("trivia_cap", 1)
    _require(isinstance(trivia_cap, int) and trivia_cap >= 0,
             f"trivia_cap must be a non-negative integer, got {trivia_cap!r}")
    top_k = raw.get("top_k", 5)
    _require(isinstance(top_k, int) and top_k > 0,
             f"top_k must be a positive integer, got {top_k!r}")
    decay = _probability(raw.get("decay", 0.5), "decay")
    _require(decay > 0.0, "decay must be positive")
    prompt = raw.get("recommendation_prompt", DEFAULT_RECOMMENDATION_PROMPT)
    _require(isinstance(prompt, str) and prompt.strip() != "",
             "recommendation_prompt must be non-empty text")
    initial_topic = raw.get("initial_topic", "InitialChat")
    _require(isinstance(initial_topic, str) and initial_topic.strip() != "",
             "initial_topic must be non-empty text")

    return EngineConfig(
        root=root,
        models=_path(root, raw.get("models", "models"), "models"),
        state=_path(root, raw.get("state", "state"), "state"),
        topics=topics,
        dialogues=dialogues,
        data=data,
        content=(_existing(root, raw["content"], "content")
                 if raw.get("content") else None),
        hooks=(_existing(root, raw["hooks"], "hooks")
               if raw.get("hooks") else None),
        embeddings=(_existing(root, raw["embeddings"], "embeddings")
                    if raw.get("embeddings") else None),
        embed_dim=embed_dim,
        seed=seed,
        switch_threshold=_probability(raw.get("switch_threshold", 0.5),
                                      "switch_threshold"),
        paraphrase_probability=_probability(
            raw.get("paraphrase_probability", 0.5), "paraphrase_probability"),
        decay=decay,
        mix_rate=_probability(raw.get("mix_rate", 0.3), "mix_rate"),
        trivia_cap=trivia_cap,
        initial_topic=initial_topic,
        recommendation_prompt=prompt,
        host=http.get("host", "127.0.0.1"),
        port=port,
        top_k=top_k,
        hcn=_hyper_section(raw.get("hcn"), "hcn", HcnHyperparams()),
        switch=_hyper_section(raw.get("switch"), "switch", SwitchConfig()),
        entity=_hyper_section(raw.get("entity"), "entity", EntityConfig()),
    )
