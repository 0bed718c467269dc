"""Command-line behavior: outputs, exit codes, and the scripted chat."""

from __future__ import annotations

import json
import shutil

import pytest

from topicflow.engine.cli import main

from test_engine import GOLDEN_12, SCRIPT_12


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_compile_lists_every_dialogue(trained_bot, capsys):
    code, out, _ = run_cli(capsys, "--config", str(trained_bot.root / "config.yaml"),
                           "compile")
    assert code == 0
    for dialogue in ("name_chat", "how_are_you", "hobbies_chat", "movie_chat",
                     "favourite_film", "music_chat", "entertainment_chat",
                     "recommend_topics"):
        assert f"{dialogue}:" in out
    assert "8 dialogues compiled" in out


def test_scripted_chat_reproduces_the_golden_transcript(trained_bot, tmp_path,
                                                        capsys):
    script = tmp_path / "script.txt"
    script.write_text("\n".join(SCRIPT_12) + "\n", encoding="utf-8")
    shutil.rmtree(trained_bot.state, ignore_errors=True)

    code, out, _ = run_cli(capsys, "--config", str(trained_bot.root / "config.yaml"),
                           "chat", "--script", str(script))
    assert code == 0
    expected = "".join(f"> {row[0]}\n{row[1]}\n" for row in GOLDEN_12)
    assert out == expected


def test_scripted_chat_is_byte_stable(trained_bot, tmp_path, capsys):
    script = tmp_path / "script.txt"
    script.write_text("\n".join(SCRIPT_12[:5]) + "\n", encoding="utf-8")
    outputs = []
    for _ in range(2):
        shutil.rmtree(trained_bot.state, ignore_errors=True)
        code, out, _ = run_cli(capsys, "--config",
                               str(trained_bot.root / "config.yaml"),
                               "chat", "--script", str(script))
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]


def test_annotate_prints_json(trained_bot, capsys):
    code, out, _ = run_cli(capsys, "--config", str(trained_bot.root / "config.yaml"),
                           "annotate", "--text", "i saw inception last week")
    assert code == 0
    payload = json.loads(out)
    assert payload["entities"][0]["text"] == "inception"
    assert "intent" in payload and "sentiment" in payload


def test_missing_config_is_a_validation_error(capsys):
    code, _, err = run_cli(capsys, "--config", "/nonexistent/config.yaml",
                           "compile")
    assert code == 1
    assert "error:" in err


def test_no_config_at_all(capsys, monkeypatch):
    monkeypatch.delenv("TOPICFLOW_CONFIG", raising=False)
    code, _, err = run_cli(capsys, "compile")
    assert code == 1
    assert "TOPICFLOW_CONFIG" in err


def test_config_via_environment(trained_bot, capsys, monkeypatch):
    monkeypatch.setenv("TOPICFLOW_CONFIG", str(trained_bot.root / "config.yaml"))
    code, out, _ = run_cli(capsys, "compile")
    assert code == 0
    assert "8 dialogues compiled" in out


def test_unknown_command_exits_via_argparse(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["bogus"])
    assert excinfo.value.code == 2


def test_script_file_missing(trained_bot, capsys):
    code, _, err = run_cli(capsys, "--config", str(trained_bot.root / "config.yaml"),
                           "chat", "--script", "/nonexistent/script.txt")
    assert code == 2
    assert "unexpected failure" in err
