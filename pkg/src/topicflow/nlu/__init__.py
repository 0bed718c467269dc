"""Language understanding: intent, entities, dialogue acts, sentiment."""

from topicflow.nlu.annotate import Annotation, Annotator
from topicflow.nlu.classifier import IntentPrediction, TextCnnClassifier, train_classifier
from topicflow.nlu.combined import CombinedModel, train_combined
from topicflow.nlu.data import (
    TagSet,
    read_entity_data,
    read_labeled_lines,
    read_sentiment_data,
)
from topicflow.nlu.entity import (
    EntityModel,
    EntitySpan,
    decode_iob,
    encode_iob,
    train_entity,
)
from topicflow.nlu.sentiment import SentimentModel, entity_sentiment, train_sentiment
from topicflow.nlu.tokenize import tokenize, tokenize_with_spans

__all__ = [
    "Annotation",
    "Annotator",
    "CombinedModel",
    "EntityModel",
    "EntitySpan",
    "IntentPrediction",
    "SentimentModel",
    "TagSet",
    "TextCnnClassifier",
    "decode_iob",
    "encode_iob",
    "entity_sentiment",
    "read_entity_data",
    "read_labeled_lines",
    "read_sentiment_data",
    "tokenize",
    "tokenize_with_spans",
    "train_classifier",
    "train_combined",
    "train_entity",
    "train_sentiment",
]
