from topicflow.engine.config import DataPaths, EngineConfig, load_engine_config
from topicflow.engine.paraphrase import eligible, paraphrase, restate
from topicflow.engine.runtime import Engine, TurnResult, annotation_payload
from topicflow.engine.server import EngineService, make_server, serve
from topicflow.engine.training import load_dialogue_graphs, train_all

__all__ = [
    "DataPaths",
    "Engine",
    "EngineConfig",
    "EngineService",
    "TurnResult",
    "annotation_payload",
    "eligible",
    "load_dialogue_graphs",
    "load_engine_config",
    "make_server",
    "paraphrase",
    "restate",
    "serve",
    "train_all",
]
