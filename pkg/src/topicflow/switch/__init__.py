from topicflow.switch.dataset import (
    EMPTY_RESPONSE,
    SwitchExample,
    generate_switch_dataset,
    load_switch_dataset,
    save_switch_dataset,
)
from topicflow.switch.model import (
    SwitchConfig,
    SwitchModel,
    detect_switch,
    evaluate_switch_accuracy,
    load_switch,
    save_switch,
    train_switch,
)

__all__ = [
    "EMPTY_RESPONSE",
    "SwitchExample",
    "generate_switch_dataset",
    "load_switch_dataset",
    "save_switch_dataset",
    "SwitchConfig",
    "SwitchModel",
    "detect_switch",
    "evaluate_switch_accuracy",
    "load_switch",
    "save_switch",
    "train_switch",
]
