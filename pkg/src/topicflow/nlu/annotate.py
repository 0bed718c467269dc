"""Single entry point bundling every annotation for one utterance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from topicflow.errors import ConfigurationError
from topicflow.nlu.classifier import IntentPrediction, TextCnnClassifier
from topicflow.nlu.combined import CombinedModel
from topicflow.nlu.entity import EntityModel, EntitySpan, decode_iob
from topicflow.nlu.sentiment import SentimentModel
from topicflow.nlu.tokenize import tokenize, tokenize_with_spans


@dataclass(frozen=True)
class Annotation:
    intent: IntentPrediction
    entities: list[EntitySpan] = field(default_factory=list)
    dialogue_act_features: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sentiment: float = 0.5


class Annotator:
    """Holds the trained models and answers everything in one call.

    Intent and entities may come either from two separate models or from one
    combined model; exactly one of the two setups must be provided.
    """

    def __init__(self, intent_model: TextCnnClassifier | None = None,
                 entity_model: EntityModel | None = None,
                 combined_model: CombinedModel | None = None,
                 dialogue_act_model: TextCnnClassifier | None = None,
                 sentiment_model: SentimentModel | None = None,
                 fallback_intent: str = "other"):
        if combined_model is None:
            missing = [name for name, model in
                       (("intent", intent_model), ("entity", entity_model))
                       if model is None]
            if missing:
                raise ConfigurationError(
                    "annotator is missing models: " + ", ".join(missing)
                    + " (provide them or a combined model)")
        self.intent_model = intent_model
        self.entity_model = entity_model
        self.combined_model = combined_model
        self.dialogue_act_model = dialogue_act_model
        self.sentiment_model = sentiment_model
        self.fallback_intent = fallback_intent

    def annotate(self, utterance: str) -> Annotation:
        tokens, char_spans = tokenize_with_spans(utterance)
        if not tokens:
            return Annotation(
                intent=IntentPrediction(label=self.fallback_intent, confidence=1.0,
                                        distribution={self.fallback_intent: 1.0}),
                entities=[],
                dialogue_act_features=self._da_features(""),
                sentiment=0.5,
            )
        if self.combined_model is not None:
            intent = self.combined_model.predict_intent(tokens)
            tags = self.combined_model.tag(tokens)
            entities = _spans_with_surface(utterance, tokens, tags, char_spans)
        else:
            intent = self.intent_model.predict(utterance)
            entities = self.entity_model.extract(utterance)
        sentiment = self.sentiment_model.score(utterance) if self.sentiment_model else 0.5
        return Annotation(intent=intent, entities=entities,
                          dialogue_act_features=self._da_features(utterance),
                          sentiment=sentiment)

    def _da_features(self, utterance: str) -> np.ndarray:
        if self.dialogue_act_model is None:
            return np.zeros(0)
        if not tokenize(utterance):
            return np.zeros(self.dialogue_act_model.config.hidden)
        return self.dialogue_act_model.hidden_features(utterance)


def _spans_with_surface(utterance: str, tokens: list[str], tags: list[str],
                        char_spans: list[tuple[int, int]]) -> list[EntitySpan]:
    out = []
    for span in decode_iob(tokens, tags):
        begin_char = char_spans[span.begin][0]
        end_char = char_spans[span.end - 1][1]
        out.append(EntitySpan(text=utterance[begin_char:end_char],
                              begin=span.begin, end=span.end, type=span.type))
    return out
