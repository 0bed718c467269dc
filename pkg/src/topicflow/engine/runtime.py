"""The conversational engine: one object that answers user messages.

Each turn runs the same pipeline: record the message, annotate it, decide
whether the user is switching topics, then either resume the unfinished
sub-dialogue or pick a new one from the topic graph. Trained models are
loaded once at startup; per-session progress lives entirely in the
context store, so an engine can be restarted (or run behind several
processes) without losing conversations.
"""

from __future__ import annotations

import hashlib
import importlib.util
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from topicflow.context.store import Context, ContextStore
from topicflow.dialogue.compile import START_STATE
from topicflow.dialogue.hooks import HookRegistry
from topicflow.engine.config import EngineConfig
from topicflow.engine.paraphrase import paraphrase
from topicflow.errors import ConfigurationError, StorageError, ValidationError
from topicflow.hcn.features import FrozenFeatures, classifier_features
from topicflow.hcn.model import (
    DmState, HcnModel, can_start, mark_started, predict_action, realize)
from topicflow.hcn.store import ModelStore
from topicflow.nlu.annotate import Annotation, Annotator
from topicflow.nlu.classifier import TextCnnClassifier
from topicflow.nlu.entity import EntityModel
from topicflow.nlu.sentiment import SentimentModel
from topicflow.switch.model import detect_switch, load_switch
from topicflow.tensor.vocab import load_embeddings
from topicflow.topics.content import ContentStore
from topicflow.topics.graph import GENERIC_KINDS, load_topic_graph
from topicflow.topics.select import FOCUS_KEY, resolve_topic, select_with_node

logger = logging.getLogger(__name__)

# Session attributes the engine maintains between turns.
INITIAL_QUEUE_KEY = "initial_queue"
TRIVIA_RUN_KEY = "trivia_run"

EMBEDDINGS_FILE = "embeddings.txt"


@dataclass(frozen=True)
class TurnResult:
    """Everything one turn produced, in wire-friendly form."""

    session_id: str
    turn_index: int
    response: str
    topic_node: str | None
    dialogue_id: str | None
    switched: bool
    switch_probability: float
    action_class: str | None
    top_actions: tuple[tuple[str, float], ...]
    paraphrased: bool
    annotation: dict

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "turn_index": self.turn_index,
            "response": self.response,
            "topic_node": self.topic_node,
            "dialogue_id": self.dialogue_id,
            "switched": self.switched,
            "switch_probability": self.switch_probability,
            "action_class": self.action_class,
            "top_actions": [[cls, p] for cls, p in self.top_actions],
            "paraphrased": self.paraphrased,
            "annotation": self.annotation,
        }


@dataclass(frozen=True)
class _TurnOutcome:
    """What _drive settled on, before paraphrasing and bookkeeping."""

    response: str
    topic_node: str | None
    dialogue_id: str | None
    action_class: str | None
    top_actions: tuple[tuple[str, float], ...]
    snapshot: dict | None
    trivia: bool = False


def annotation_payload(annotation: Annotation) -> dict:
    """Annotation as plain JSON-serializable data."""
    return {
        "intent": annotation.intent.label,
        "confidence": float(annotation.intent.confidence),
        "distribution": {label: float(p) for label, p
                         in sorted(annotation.intent.distribution.items())},
        "entities": [{"text": span.text, "type": span.type,
                      "begin": span.begin, "end": span.end}
                     for span in annotation.entities],
        "sentiment": float(annotation.sentiment),
    }


def load_hooks(path: Path | None) -> HookRegistry:
    """Loads a bot's hook file, a module defining register(registry)."""
    registry = HookRegistry()
    if path is None:
        return registry
    spec = importlib.util.spec_from_file_location("topicflow_bot_hooks",
                                                  path)
    if spec is None or spec.loader is None:
        raise ConfigurationError(f"cannot import hooks file: {path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    register = getattr(module, "register", None)
    if not callable(register):
        raise ConfigurationError(
            f"hooks file {path} must define a register(registry) function")
    register(registry)
    return registry


def _encode_state(state: DmState) -> dict:
    return {
        "h": state.h.tolist(),
        "c": state.c.tolist(),
        "last_predicted": state.last_predicted,
        "last_realized": state.last_realized,
        "finished": state.finished,
    }


def _decode_state(raw: dict) -> DmState:
    return DmState(
        h=np.asarray(raw["h"], dtype=np.float64),
        c=np.asarray(raw["c"], dtype=np.float64),
        last_predicted=raw["last_predicted"],
        last_realized=raw["last_realized"],
        finished=raw["finished"],
    )


class Engine:
    """Loads a trained bot and answers messages session by session."""

    def __init__(self, config: EngineConfig, *,
                 contexts: ContextStore | None = None):
        self.config = config
        models = Path(config.models)
        if not (models / EMBEDDINGS_FILE).is_file():
            raise StorageError(
                f"no trained models under {models}; run train-all first")
        self.table = load_embeddings(str(models / EMBEDDINGS_FILE))

        self.intent_model = TextCnnClassifier.load(str(models / "intent"))
        self.entity_model = EntityModel.load(str(models / "entity"))
        self.acts_model = (TextCnnClassifier.load(str(models / "acts"))
                           if (models / "acts").is_dir() else None)
        self.sentiment_model = (SentimentModel.load(str(models / "sentiment"))
                                if (models / "sentiment").is_dir() else None)
        self.annotator = Annotator(
            intent_model=self.intent_model, entity_model=self.entity_model,
            dialogue_act_model=self.acts_model,
            sentiment_model=self.sentiment_model)

        self.store = ModelStore(
            models / "dialogues", self.table,
            sentiment=_sentiment_features(self.sentiment_model),
            acts=(classifier_features("acts", self.acts_model)
                  if self.acts_model else None))
        dialogue_ids = self.store.ids()
        if not dialogue_ids:
            raise StorageError(f"no dialogue managers under {models}")

        self.graph = load_topic_graph(config.topics,
                                      known_dialogues=set(dialogue_ids))
        self.content = (ContentStore.load(config.content)
                        if config.content else None)
        self.switch_model = load_switch(models / "switch", self.table)
        self.hooks = load_hooks(config.hooks)
        self.contexts = contexts if contexts is not None \
            else ContextStore(config.state)

        initial = self.graph.nodes.get(config.initial_topic)
        if initial is not None and initial.kind != "detached":
            raise ConfigurationError(
                f"initial topic {config.initial_topic!r} must be a detached "
                f"node, got kind {initial.kind!r}")
        self._initial_node = initial.name if initial else None
        self._initial_dialogues = tuple(initial.dialogues) if initial else ()

        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self._store_lock = threading.Lock()

    # ------------------------------------------------------------------
    # public surface

    def respond(self, session_id: str, user_id: str,
                utterance: str) -> TurnResult:
        """Runs one full turn and commits it to the context store."""
        with self._session_lock(session_id):
            with self._store_lock:
                context = self.contexts.begin_turn(session_id, user_id,
                                                   utterance)
            rng = self._turn_rng(session_id, context.turn_index)
            annotation = self.annotator.annotate(utterance)
            context.annotation = annotation_payload(annotation)
            if annotation.entities:
                context.session[FOCUS_KEY] = annotation.entities[0].text

            prev = context.history[0] if context.history else None
            switched = False
            probability = 0.0
            if prev is None:
                context.session[INITIAL_QUEUE_KEY] = \
                    list(self._initial_dialogues)
            else:
                probability = float(detect_switch(
                    self.switch_model, _core_response(prev), utterance))
                switched = probability > self.config.switch_threshold

            outcome = self._drive(context, prev, annotation, switched, rng)

            response = outcome.response
            restated = paraphrase(utterance, rng,
                                  self.config.paraphrase_probability)
            if restated is not None:
                response = restated + ". " + response

            run = int(context.session.get(TRIVIA_RUN_KEY, 0))
            context.session[TRIVIA_RUN_KEY] = run + 1 if outcome.trivia else 0
            context.topic_node = outcome.topic_node
            context.dialogue_id = outcome.dialogue_id
            context.dm_state = json.dumps({
                "response": outcome.response,
                "dialogue": (outcome.dialogue_id
                             if outcome.snapshot is not None else None),
                "state": outcome.snapshot,
            })
            context.response = response
            with self._store_lock:
                self.contexts.commit_turn(context)

            return TurnResult(
                session_id=session_id,
                turn_index=context.turn_index,
                response=response,
                topic_node=outcome.topic_node,
                dialogue_id=outcome.dialogue_id,
                switched=switched,
                switch_probability=probability,
                action_class=outcome.action_class,
                top_actions=outcome.top_actions,
                paraphrased=restated is not None,
                annotation=context.annotation,
            )

    def annotate(self, utterance: str) -> dict:
        return annotation_payload(self.annotator.annotate(utterance))

    def history(self, session_id: str, limit: int = 20) -> list[dict]:
        """Committed turns, oldest first, in wire-friendly form."""
        with self._store_lock:
            turns = self.contexts.load_history(session_id, limit=limit)
        return [
            {
                "turn_index": c.turn_index,
                "utterance": c.utterance,
                "response": c.response,
                "topic_node": c.topic_node,
                "dialogue_id": c.dialogue_id,
                "annotation": c.annotation,
                "timestamp": c.timestamp,
            }
            for c in reversed(turns)
        ]

    # ------------------------------------------------------------------
    # turn pipeline

    def _drive(self, context: Context, prev: Context | None,
               annotation: Annotation, switched: bool,
               rng: np.random.Generator) -> _TurnOutcome:
        """Chooses and executes the sub-dialogue activity for one turn."""
        if prev is not None and not switched:
            resumed = self._resume(prev, context, rng)
            if resumed is not None:
                return resumed

        queue = context.session.get(INITIAL_QUEUE_KEY) or []
        if switched:
            # The user moved on; drop the remaining scripted openers.
            context.session[INITIAL_QUEUE_KEY] = []
        else:
            while queue:
                dialogue_id = queue.pop(0)
                if can_start(dialogue_id, context, self.hooks):
                    return self._enter(dialogue_id, self._initial_node,
                                       context, rng)

        blocked = (int(context.session.get(TRIVIA_RUN_KEY, 0))
                   >= self.config.trivia_cap)
        candidates: list[str] = []
        if switched:
            node, focus = resolve_topic(self.graph, annotation.entities,
                                        annotation.intent.label)
            if focus:
                context.session[FOCUS_KEY] = focus
            if node is not None:
                candidates.append(node.name)
        elif prev is not None and prev.topic_node in self.graph.nodes:
            candidates.append(prev.topic_node)
        recommendation = self.graph.recommendation
        if recommendation is not None and recommendation.name not in candidates:
            candidates.append(recommendation.name)

        for name in candidates:
            picked = select_with_node(
                self.graph, name, context, self.hooks, rng,
                store=None if blocked else self.content,
                decay=self.config.decay)
            if picked is None:
                continue
            node_name, dialogue_id = picked
            if dialogue_id in GENERIC_KINDS:
                return self._trivia(node_name, dialogue_id, context, rng)
            return self._enter(dialogue_id, node_name, context, rng)

        name = recommendation.name if recommendation is not None else None
        return _TurnOutcome(self.config.recommendation_prompt, name, None,
                            None, (), None)

    def _resume(self, prev: Context, context: Context,
                rng: np.random.Generator) -> _TurnOutcome | None:
        """Advances the open sub-dialogue, or None when there is none left."""
        blob = _state_blob(prev)
        if not blob or blob.get("state") is None or blob["state"]["finished"]:
            return None
        dialogue_id = blob["dialogue"]
        model = self.store.get(dialogue_id)
        state = _decode_state(blob["state"])
        features, _ = model.featurize(context.utterance, state.last_predicted)
        action, dist, state = predict_action(model, state, features)
        if action is None:
            return None
        realized = realize(model, action, context, self.hooks, rng)
        state = model.mark_realized(state, realized.final_class)
        return _TurnOutcome(realized.text, prev.topic_node, dialogue_id,
                            realized.final_class, self._top(model, dist),
                            _encode_state(state))

    def _enter(self, dialogue_id: str, node_name: str | None,
               context: Context, rng: np.random.Generator) -> _TurnOutcome:
        """Starts a sub-dialogue by realizing its opening response.

        No prediction happens here, exactly as in training: the manager's
        first real step comes with the user's next message.
        """
        model = self.store.get(dialogue_id)
        mark_started(dialogue_id, context)
        state = model.initial_state()
        realized = realize(model, _start_class(model), context, self.hooks,
                           rng)
        state = model.mark_realized(state, realized.final_class)
        return _TurnOutcome(realized.text, node_name, dialogue_id,
                            realized.final_class, (), _encode_state(state))

    def _trivia(self, node_name: str, kind: str, context: Context,
                rng: np.random.Generator) -> _TurnOutcome:
        """One content-store response about the entity in focus."""
        focus = context.session.get(FOCUS_KEY, "")
        texts = self.content.find(kind, focus)
        text = texts[int(rng.integers(len(texts)))] if len(texts) > 1 \
            else texts[0]
        return _TurnOutcome(text, node_name, kind, None, (), None,
                            trivia=True)

    def _top(self, model: HcnModel,
             dist: np.ndarray) -> tuple[tuple[str, float], ...]:
        order = np.argsort(-dist, kind="stable")[:self.config.top_k]
        return tuple((model.classes[int(i)], float(dist[int(i)]))
                     for i in order if dist[int(i)] > 0.0)

    # ------------------------------------------------------------------
    # plumbing

    def _turn_rng(self, session_id: str,
                  turn_index: int) -> np.random.Generator:
        """Per-turn generator; stable across restarts and transports."""
        digest = hashlib.sha256(session_id.encode("utf-8")).digest()
        key = int.from_bytes(digest[:8], "big")
        seq = np.random.SeedSequence((self.config.seed, key, turn_index))
        return np.random.default_rng(seq)

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = self._locks[session_id] = threading.Lock()
            return lock


def _sentiment_features(model: SentimentModel | None) -> FrozenFeatures | None:
    if model is None:
        return None
    return FrozenFeatures(name="sentiment", dim=1,
                          fn=lambda text: np.array([model.score(text)]))


def _start_class(model: HcnModel) -> str:
    starts = np.flatnonzero(model.mask_table.row(START_STATE))
    if len(starts) != 1:
        raise ValidationError(
            f"dialogue {model.dialogue_id!r} must have exactly one start "
            f"class, found {len(starts)}")
    return model.classes[int(starts[0])]


def _state_blob(prev: Context) -> dict | None:
    if not prev.dm_state:
        return None
    try:
        return json.loads(prev.dm_state)
    except json.JSONDecodeError:
        logger.warning("discarding unreadable dialogue state for session %r",
                       prev.session_id)
        return None


def _core_response(prev: Context) -> str:
    """The bot response without any paraphrase prefix, for the detector."""
    blob = _state_blob(prev)
    if blob and isinstance(blob.get("response"), str):
        return blob["response"]
    return prev.response or ""
