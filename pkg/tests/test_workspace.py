"""
Tests for the workspace lock and atomic writes.
"""

from unittest.mock import patch

import pytest

from utils.error_handler import WorkspaceLocked
from utils.workspace import LOCK_NAME, WorkspaceLock, atomic_write_text, remove_partials


class TestWorkspaceLock:
    """Test the advisory run lock."""

    def test_context_manager(self, tmp_path):
        """The lock file exists while held and is removed afterwards."""
        with WorkspaceLock(tmp_path / "run") as lock:
            assert lock.path.exists()
            assert lock.path.name == LOCK_NAME
            assert "pid=" in lock.path.read_text(encoding="utf-8")
        assert not lock.path.exists()

    def test_second_holder_is_refused(self, tmp_path):
        """A concurrent run gets WorkspaceLocked naming the owner."""
        with WorkspaceLock(tmp_path):
            with pytest.raises(WorkspaceLocked, match="pid="):
                WorkspaceLock(tmp_path).acquire()

    def test_release_on_error(self, tmp_path):
        """The lock is released when the body raises."""
        lock = WorkspaceLock(tmp_path)
        with pytest.raises(RuntimeError):
            with lock:
                raise RuntimeError("boom")
        assert not lock.path.exists()

    def test_release_without_acquire(self, tmp_path):
        """Releasing an unheld lock leaves a foreign lock file alone."""
        (tmp_path / LOCK_NAME).write_text("pid=1\n", encoding="utf-8")
        WorkspaceLock(tmp_path).release()
        assert (tmp_path / LOCK_NAME).exists()


class TestAtomicWrite:
    """Test atomic artifact writes."""

    def test_writes_and_creates_parents(self, tmp_path):
        """Text lands at the target and no partial file remains."""
        target = tmp_path / "a" / "b" / "report.md"
        atomic_write_text(target, "hello\n")
        assert target.read_text(encoding="utf-8") == "hello\n"
        assert list(target.parent.iterdir()) == [target]

    def test_failed_rename_leaves_no_partial(self, tmp_path):
        """A failure keeps the old file and removes the partial."""
        target = tmp_path / "report.md"
        target.write_text("old", encoding="utf-8")
        with patch("utils.workspace.os.replace", side_effect=OSError("disk full")):
            with pytest.raises(OSError):
                atomic_write_text(target, "new")
        assert target.read_text(encoding="utf-8") == "old"
        assert list(tmp_path.iterdir()) == [target]


class TestRemovePartials:
    """Test cleanup of interrupted runs."""

    def test_removes_nested_partials(self, tmp_path):
        """Partial files at any depth are deleted and counted."""
        (tmp_path / "sub").mkdir()
        (tmp_path / "bank.json.partial").write_text("x", encoding="utf-8")
        (tmp_path / "sub" / "report.md.partial").write_text("x", encoding="utf-8")
        (tmp_path / "bank.json").write_text("{}", encoding="utf-8")

        assert remove_partials(tmp_path) == 2
        assert (tmp_path / "bank.json").exists()
        assert not list(tmp_path.rglob("*.partial"))

    def test_missing_directory(self, tmp_path):
        """A missing directory has nothing to clean."""
        assert remove_partials(tmp_path / "absent") == 0
