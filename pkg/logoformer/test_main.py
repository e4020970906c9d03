# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""test LOGO-Former main"""
from contextlib import redirect_stdout
from io import StringIO
from logging import DEBUG

from .args import LogoFormerArgs
from .common.exceptions import ConfigError, NumericInputError
from .common.status import Status
from .main import EXIT_ABORT, EXIT_ERROR, EXIT_SUCCESS, main
from .model.core import Model
from .train.export import load_embeddings

TINY = "\n".join((
    "# tiny model",
    "F = 2", "H = 2", "W = 2", "C = 4", "d = 8", "N = 1", "heads = 2",
    "window = 1,2,2", "num_classes = 3",
    "epochs = 2", "batch_size = 3", "lr = 0.01", "clips_per_class = 2", ""))


def _args(*argv):
    return LogoFormerArgs().parse_args(argv=list(argv))


def _config(tmp_path):
    config = tmp_path / "tiny.cfg"
    config.write_text(TINY)
    return str(config)


def test_main_01(capsys, tmp_path):
    """test main() train, eval, export-embeddings and status"""
    config = _config(tmp_path)
    out_dir = tmp_path / "run"
    assert main(_args("train", "--config", config, "--out", str(out_dir))) == EXIT_SUCCESS
    for name in ("model.lgfm", "history.csv", "status.json"):
        assert (out_dir / name).is_file()
    assert not (out_dir / "status.json.lock").exists()
    assert len((out_dir / "history.csv").read_text().splitlines()) == 3
    ckpt = str(out_dir / "model.lgfm")
    assert Model.load(ckpt).config.d == 8
    # eval
    capsys.readouterr()
    assert main(_args("eval", "--config", config, "--model", ckpt)) == EXIT_SUCCESS
    out, _ = capsys.readouterr()
    assert "UAR: " in out
    assert "WAR: " in out
    # export-embeddings
    emb = tmp_path / "emb.csv"
    assert main(_args("export-embeddings", "--config", config, "--model", ckpt,
                      "--clips-per-class", "3", "--out", str(emb))) == EXIT_SUCCESS
    rows = load_embeddings(str(emb))
    assert len(rows) == 9
    assert all(feature.shape == (8,) for _, feature in rows)
    # status
    assert main(_args("status", str(out_dir))) == EXIT_SUCCESS
    out, _ = capsys.readouterr()
    assert out.startswith("Epoch 2/2")
    assert Status.load(str(out_dir / "status.json")).epoch == 2


def test_main_02(tmp_path):
    """test main() train with --resume and overrides"""
    config = _config(tmp_path)
    first = tmp_path / "first"
    assert main(_args("train", "--config", config, "--out", str(first), "--epochs", "1",
                      "--seed", "3")) == EXIT_SUCCESS
    assert main(_args("train", "--config", config, "--out", str(first), "--seed", "3",
                      "--resume", str(first / "model.lgfm"))) == EXIT_SUCCESS
    assert len((first / "history.csv").read_text().splitlines()) == 3
    straight = tmp_path / "straight"
    assert main(_args("train", "--config", config, "--out", str(straight),
                      "--seed", "3")) == EXIT_SUCCESS
    assert (first / "model.lgfm").read_bytes() == (straight / "model.lgfm").read_bytes()
    # resuming with another model config fails
    other = tmp_path / "other.cfg"
    other.write_text(TINY.replace("d = 8", "d = 4"))
    assert main(_args("train", "--config", str(other), "--out", str(tmp_path / "x"),
                      "--resume", str(first / "model.lgfm"))) == EXIT_ERROR


def test_main_03(capsys, tmp_path):
    """test main() cost"""
    assert main(_args("cost", "--config", "4,4,4,2,2,2")) == EXIT_SUCCESS
    out, _ = capsys.readouterr()
    lines = out.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("F,H,W,f,h,w,cost_local")
    assert lines[1] == "4,4,4,2,2,2,512,512,1024,4096,1024,1280,1024,1"
    grid = tmp_path / "grid.txt"
    grid.write_text("4,4,4,2,2,2\n4,4,4,3,2,2\n")
    out_csv = tmp_path / "cost.csv"
    assert main(_args("cost", "--grid", str(grid), "--out", str(out_csv))) == EXIT_SUCCESS
    assert out_csv.read_text().splitlines()[1:] == [
        "4,4,4,2,2,2,512,512,1024,4096,1024,1280,1024,1", "4,4,4,3,2,2,,,,,,,,error"]
    # unwritable output
    assert main(_args("cost", "--grid", str(grid), "--out", str(tmp_path / "no" / "c.csv"))) == EXIT_ERROR
    # malformed grid
    grid.write_text("4,4,4\n")
    assert main(_args("cost", "--grid", str(grid))) == EXIT_ERROR


def test_main_04(capsys, tmp_path):
    """test main() gradcheck"""
    assert main(_args("gradcheck", "--head-only")) == EXIT_SUCCESS
    out, _ = capsys.readouterr()
    assert out.splitlines()[0].startswith("Parameter")
    assert "head.weight" in out
    assert "head.bias" in out
    assert "embed." not in out
    assert main(_args("gradcheck", "--head-only", "--threshold", "1e-300")) == EXIT_ERROR
    # config file
    config = _config(tmp_path)
    assert main(_args("gradcheck", "--config", config, "--head-only", "--lambda", "0")) == EXIT_SUCCESS


def test_main_05(tmp_path):
    """test main() status without a report"""
    assert main(_args("status", str(tmp_path))) == EXIT_ERROR


def test_main_06(caplog, mocker, tmp_path):
    """test main() error handling"""
    fake_cost = mocker.Mock(side_effect=KeyboardInterrupt)
    mocker.patch.dict("logoformer.main.COMMANDS", {"cost": fake_cost})
    args = _args("--log-level", "DEBUG", "cost", "--config", "4,4,4,2,2,2")
    assert args.log_level == DEBUG
    assert main(args) == EXIT_ABORT
    assert fake_cost.call_count == 1
    fake_cost.side_effect = NumericInputError("bad value", code=5)
    assert main(args) == 5
    assert "Error: bad value" in caplog.text
    fake_cost.side_effect = ConfigError("bad config")
    assert main(args) == EXIT_ERROR
    # train with a broken config file
    config = tmp_path / "bad.cfg"
    config.write_text("F = x\n")
    assert main(_args("train", "--config", str(config), "--out", str(tmp_path))) == EXIT_ERROR


def test_main_07():
    """test main() cost writes to the current sys.stdout"""
    args = _args("cost", "--config", "4,4,4,2,2,2")
    captured = StringIO()
    with redirect_stdout(captured):
        assert main(args) == EXIT_SUCCESS
    lines = captured.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[1] == "4,4,4,2,2,2,512,512,1024,4096,1024,1280,1024,1"
