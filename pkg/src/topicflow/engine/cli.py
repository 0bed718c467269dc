"""Command-line entry point.

    topicflow compile    --config bot/config.yaml
    topicflow train-all  --config bot/config.yaml
    topicflow chat       --config bot/config.yaml [--script FILE] [--session ID]
    topicflow serve      --config bot/config.yaml [--host H] [--port P]
    topicflow annotate   --config bot/config.yaml --text "..."
    topicflow eval-babi6 --data DIR [--variant NAME] [--out DIR]

The config path may also come from the TOPICFLOW_CONFIG environment
variable. Exit codes: 0 on success, 1 for validation or configuration
problems, 2 for unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys

from topicflow.errors import TopicflowError

_EXIT_VALIDATION = 1
_EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicflow",
        description="Topic-graph conversational engine")
    parser.add_argument(
        "--config",
        default=os.environ.get("TOPICFLOW_CONFIG"),
        help="bot config file (default: $TOPICFLOW_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("compile",
                   help="validate and summarize the bot's dialogues")
    sub.add_parser("train-all", help="train every model the bot needs")

    chat = sub.add_parser("chat", help="talk to the bot on the terminal")
    chat.add_argument("--script", help="file with one user message per line")
    chat.add_argument("--session", default="local", help="session id")
    chat.add_argument("--user", default="local", help="user id")

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", help="bind address (overrides config)")
    serve.add_argument("--port", type=int, help="port (overrides config)")

    annotate = sub.add_parser("annotate", help="print the NLU annotation")
    annotate.add_argument("--text", required=True)

    babi = sub.add_parser("eval-babi6",
                          help="train and score a bAbI Task 6 manager")
    babi.add_argument("--data", required=True,
                      help="directory with the task's train/dev/test files")
    babi.add_argument("--variant", default="fasttext+cnn",
                      help="hyperparameter preset (e.g. fasttext+cnn, word2vec)")
    babi.add_argument("--embeddings",
                      help="pretrained word-vector file for the variant")
    babi.add_argument("--out", help="directory for the trained manager")
    babi.add_argument("--seed", type=int, default=0)
    return parser


def _load_config(args):
    from topicflow.engine.config import load_engine_config
    from topicflow.errors import ConfigurationError
    if not args.config:
        raise ConfigurationError(
            "no config file: pass --config or set TOPICFLOW_CONFIG")
    return load_engine_config(args.config)


def _cmd_compile(args) -> int:
    from topicflow.dialogue.compile import compile_transitions
    from topicflow.engine.training import load_dialogue_graphs

    config = _load_config(args)
    graphs = load_dialogue_graphs(config.dialogues)
    for gid in sorted(graphs):
        graph = graphs[gid]
        transitions = compile_transitions(graph)
        print(f"{gid}: {len(graph.nodes)} nodes, "
              f"{len(transitions)} transitions")
    print(f"{len(graphs)} dialogues compiled")
    return 0


def _cmd_train_all(args) -> int:
    from topicflow.engine.training import train_all

    config = _load_config(args)
    train_all(config, log=print)
    return 0


def _cmd_chat(args) -> int:
    from topicflow.engine.runtime import Engine

    engine = Engine(_load_config(args))
    if args.script:
        with open(args.script, encoding="utf-8") as fh:
            lines = [line.strip() for line in fh if line.strip()]
    else:
        lines = None

    if lines is not None:
        for line in lines:
            result = engine.respond(args.session, args.user, line)
            print(f"> {line}")
            print(result.response)
        return 0

    print("topicflow chat; empty line quits")
    while True:
        try:
            line = input("> ")
        except EOFError:
            break
        if not line.strip():
            break
        result = engine.respond(args.session, args.user, line)
        print(result.response)
    return 0


def _cmd_serve(args) -> int:
    import dataclasses

    from topicflow.engine.server import serve

    config = _load_config(args)
    overrides = {}
    if args.host:
        overrides["host"] = args.host
    if args.port is not None:
        overrides["port"] = args.port
    if overrides:
        config = dataclasses.replace(config, **overrides)
    serve(config)
    return 0


def _cmd_annotate(args) -> int:
    import json

    from topicflow.engine.runtime import Engine

    engine = Engine(_load_config(args))
    print(json.dumps(engine.annotate(args.text), indent=2, sort_keys=True))
    return 0


def _cmd_eval_babi6(args) -> int:
    from topicflow.evaluation.babi6 import run_variant

    report = run_variant(args.data, variant=args.variant,
                         embeddings=args.embeddings, out=args.out,
                         seed=args.seed, log=print)
    print(f"turn accuracy (test): {report['test_turn_accuracy']:.4f}")
    return 0


_COMMANDS = {
    "compile": _cmd_compile,
    "train-all": _cmd_train_all,
    "chat": _cmd_chat,
    "serve": _cmd_serve,
    "annotate": _cmd_annotate,
    "eval-babi6": _cmd_eval_babi6,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TopicflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except KeyboardInterrupt:
        return _EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return _EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
