"""Workspace helpers: the advisory run lock and atomic artifact writes."""

import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from utils.error_handler import WorkspaceLocked

LOCK_NAME = ".forge.lock"
PARTIAL_SUFFIX = ".partial"

logger = logging.getLogger(__name__)


class WorkspaceLock:
    """Exclusive-create lock file; a second holder gets WorkspaceLocked."""

    def __init__(self, workspace: Path):
        self.workspace = Path(workspace)
        self.path = self.workspace / LOCK_NAME
        self._held = False

    def acquire(self) -> "WorkspaceLock":
        self.workspace.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            owner = self._owner()
            raise WorkspaceLocked(
                f"Workspace {self.workspace} is locked ({owner}); remove {self.path} if no run is active"
            ) from None
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(f"pid={os.getpid()} since={datetime.now(timezone.utc).isoformat()}\n")
        self._held = True
        logger.debug(f"Acquired {self.path}")
        return self

    def release(self):
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False
            logger.debug(f"Released {self.path}")

    def _owner(self) -> str:
        try:
            return self.path.read_text(encoding="utf-8").strip() or "unknown owner"
        except OSError:
            return "unknown owner"

    def __enter__(self) -> "WorkspaceLock":
        return self.acquire()

    def __exit__(self, exc_type, exc, tb):
        self.release()
        return False


def atomic_write_text(path: Path, text: str, encoding: str = "utf-8") -> Path:
    """Write through a ``.partial`` sibling and rename, so readers never see half a file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + PARTIAL_SUFFIX)
    try:
        with open(tmp, "w", encoding=encoding, newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def remove_partials(directory: Path, suffix: Optional[str] = PARTIAL_SUFFIX) -> int:
    """Delete leftover ``.partial`` files from an interrupted run."""
    directory = Path(directory)
    if not directory.is_dir():
        return 0
    removed = 0
    for leftover in directory.rglob(f"*{suffix}"):
        leftover.unlink(missing_ok=True)
        removed += 1
    if removed:
        logger.warning(f"Removed {removed} incomplete artifacts from {directory}")
    return removed
