"""Tests for the serial and pooled task executors."""

import threading

import pytest

from cascade_feature_learner.executors import PoolExecutor, SerialExecutor, create_executor


class TestSerialExecutor:
    """Test cases for in-order execution."""

    def test_runs_in_order_on_the_calling_thread(self) -> None:
        """Test submission order and thread."""
        seen: list[tuple[int, int]] = []

        def record(item: int) -> int:
            seen.append((item, threading.get_ident()))
            return item * 2

        assert SerialExecutor().map(record, [3, 1, 2]) == [6, 2, 4]
        assert [item for item, _ in seen] == [3, 1, 2]
        assert {ident for _, ident in seen} == {threading.get_ident()}

    def test_debug_timing(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that debug mode reports task counts and timing."""
        SerialExecutor(debug=True).map(str, [1, 2])
        output = capsys.readouterr().out
        assert "Running 2 task(s) serially" in output
        assert "Serial tasks completed in" in output


class TestPoolExecutor:
    """Test cases for thread-pool execution."""

    def test_results_keep_input_order(self) -> None:
        """Test that results come back in submission order."""
        assert PoolExecutor(max_workers=4).map(lambda item: item * item, list(range(20))) == [
            item * item for item in range(20)
        ]

    def test_task_exception_propagates(self) -> None:
        """Test that a failing task raises in the caller."""

        def fail(item: int) -> int:
            if item == 3:
                raise ValueError("boom")
            return item

        with pytest.raises(ValueError, match="boom"):
            PoolExecutor(max_workers=2).map(fail, [1, 2, 3, 4])

    def test_worker_count(self) -> None:
        """Test worker-count validation."""
        with pytest.raises(ValueError, match="max_workers"):
            PoolExecutor(max_workers=0)
        assert PoolExecutor(max_workers=3).max_workers == 3


class TestCreateExecutor:
    """Test cases for executor selection."""

    def test_deterministic_is_serial(self) -> None:
        """Test the mapping from the determinism flag to an executor."""
        assert isinstance(create_executor(True), SerialExecutor)
        assert create_executor(True).is_deterministic()
        assert isinstance(create_executor(False), PoolExecutor)
        assert not create_executor(False).is_deterministic()
