"""Hook implementations for the sample bot."""

_FILLER = {"my", "name", "is", "i", "am", "people", "call", "me", "it's", "its"}


def _extract_name(utterance: str) -> str:
    words = [w.strip(".,!?") for w in utterance.split()]
    for word in reversed(words):
        if word and word.lower() not in _FILLER:
            return word.capitalize()
    return "friend"


def remember_name(context):
    context.session["user_name"] = _extract_name(context.utterance)
    return "greet_named"


def user_name(context):
    return context.session.get("user_name", "friend")


def register(registry):
    registry.register_function("remember_name", remember_name)
    registry.register_text_action("user_name", user_name)
