"""Tests for the logging decorators and the CSV metrics sink."""

import csv
import logging

import pytest

from src.logger import MetricsLogger, log_function


def test_metrics_rows_and_formatting(tmp_path):
    path = tmp_path / "train" / "metrics.csv"
    with MetricsLogger(path, ["epoch", "phase", "critic_loss"]) as metrics:
        metrics.log(epoch=1, phase="critic_proposal", critic_loss=0.693147180)
        metrics.log(epoch=2, phase="affordance", unused=3)
        assert metrics.rows_written == 2

    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert rows[0] == {"epoch": "1", "phase": "critic_proposal", "critic_loss": "0.693147"}
    assert rows[1] == {"epoch": "2", "phase": "affordance", "critic_loss": ""}


def test_metrics_header_written_before_any_row(tmp_path):
    path = tmp_path / "metrics.csv"
    metrics = MetricsLogger(path, ["epoch", "auc"])
    assert path.read_text().strip() == "epoch,auc"
    metrics.close()
    metrics.close()


def test_log_function_reraises_and_logs(caplog):
    @log_function(logger_name="relaytrain")
    def failing():
        raise ValueError("no positive samples")

    with caplog.at_level(logging.INFO, logger="relaytrain"):
        with pytest.raises(ValueError, match="no positive samples"):
            failing()
    assert any("Exception in failing" in r.getMessage() for r in caplog.records)


def test_log_function_keeps_the_result(caplog):
    @log_function(logger_name="planner", log_result=True)
    def add(a, b):
        return a + b

    with caplog.at_level(logging.INFO, logger="planner"):
        assert add(2, 3) == 5
    messages = [r.getMessage() for r in caplog.records]
    assert messages[0] == "Calling add"
    assert messages[-1].startswith("Completed add in") and messages[-1].endswith("with result: 5")
    assert add.__name__ == "add"
