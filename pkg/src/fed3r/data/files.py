import os
import tempfile
from pathlib import Path
from typing import Union

from src.fed3r.exception.core import CorruptFile, IoFailure, TruncatedFile

PathLike = Union[str, os.PathLike]


def atomic_write_bytes(path: PathLike, payload: bytes) -> None:
    """
    Write `payload` to a temporary sibling of `path` and rename it into place,
    so readers never observe a partially written file.

    :raises IoFailure: if the directory is not writable or the rename fails
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp_name, target)
        except BaseException:
            Path(tmp_name).unlink(missing_ok=True)
            raise
    except OSError as error:
        raise IoFailure(f"cannot_write:{target}") from error


def atomic_write_text(path: PathLike, text: str) -> None:
    # LF line endings regardless of platform
    atomic_write_bytes(path, text.encode("utf-8"))


def read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as error:
        raise IoFailure(f"cannot_read:{path}") from error


class ByteReader:
    """Sequential reader over an in-memory payload that fails with TruncatedFile."""

    def __init__(self, payload: bytes):
        self._payload = memoryview(payload)
        self._offset = 0

    @property
    def remaining(self) -> int:
        return len(self._payload) - self._offset

    def take(self, size: int) -> memoryview:
        if size < 0 or size > self.remaining:
            raise TruncatedFile()
        chunk = self._payload[self._offset:self._offset + size]
        self._offset += size
        return chunk

    def finish(self) -> None:
        if self.remaining:
            raise CorruptFile(f"trailing_bytes:{self.remaining}")
