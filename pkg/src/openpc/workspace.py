"""Per-user virtual workspaces backing the OS command set.

Each user gets an isolated in-memory file tree.  Every path argument is
normalized and checked against the workspace root before use, so commands can
never reach another user's files or the host filesystem.
"""

from __future__ import annotations

import base64
import posixpath

from .errors import PathEscapeError, WorkspaceError

OS_VERBS = ("ls", "cat", "cp", "mv", "rm", "mkdir", "upload", "download")


def normalize(path: str) -> str:
    """Collapse a user-supplied path to a root-relative form.

    Raises PathEscape for absolute paths and anything that climbs above the
    root after normalization.
    """
    if path.startswith("/") or path.startswith("~"):
        raise PathEscapeError(f"absolute path not allowed: {path!r}")
    cleaned = posixpath.normpath(path)
    if cleaned == ".." or cleaned.startswith("../"):
        raise PathEscapeError(f"path escapes workspace: {path!r}")
    return "" if cleaned == "." else cleaned


class Workspace:
    """One user's tree: a set of directories and a name -> bytes file map."""

    def __init__(self):
        self.dirs: set[str] = {""}
        self.files: dict[str, bytes] = {}

    # -- primitives -----------------------------------------------------------

    def _parent_of(self, path: str) -> str:
        return posixpath.dirname(path)

    def _require_parent(self, path: str) -> None:
        parent = self._parent_of(path)
        if parent not in self.dirs:
            raise WorkspaceError(f"no such directory: {parent or '.'}")

    def write_file(self, path: str, data: bytes) -> str:
        path = normalize(path)
        if not path or path in self.dirs:
            raise WorkspaceError(f"not a writable file path: {path or '.'}")
        self._require_parent(path)
        self.files[path] = data
        return path

    def read_file(self, path: str) -> bytes:
        path = normalize(path)
        if path not in self.files:
            raise WorkspaceError(f"no such file: {path}")
        return self.files[path]

    def mkdir(self, path: str) -> str:
        path = normalize(path)
        if not path:
            raise WorkspaceError("workspace root already exists")
        if path in self.dirs or path in self.files:
            raise WorkspaceError(f"already exists: {path}")
        self._require_parent(path)
        self.dirs.add(path)
        return path

    def remove(self, path: str) -> str:
        path = normalize(path)
        if path in self.files:
            del self.files[path]
            return path
        if path in self.dirs:
            if path == "":
                raise WorkspaceError("cannot remove workspace root")
            prefix = path + "/"
            occupied = any(e.startswith(prefix) for e in self.dirs) or any(
                e.startswith(prefix) for e in self.files
            )
            if occupied:
                raise WorkspaceError(f"directory not empty: {path}")
            self.dirs.discard(path)
            return path
        raise WorkspaceError(f"no such file or directory: {path}")

    def listing(self, path: str = "") -> list[str]:
        path = normalize(path)
        if path in self.files:
            return [posixpath.basename(path)]
        if path not in self.dirs:
            raise WorkspaceError(f"no such file or directory: {path or '.'}")
        prefix = path + "/" if path else ""
        names = set()
        for entry in self.dirs:
            if entry and entry.startswith(prefix):
                names.add(entry[len(prefix):].split("/", 1)[0] + "/")
        for entry in self.files:
            if entry.startswith(prefix):
                rest = entry[len(prefix):]
                if "/" in rest:
                    names.add(rest.split("/", 1)[0] + "/")
                else:
                    names.add(rest)
        return sorted(names)

    def copy(self, src: str, dst: str) -> str:
        data = self.read_file(src)
        return self.write_file(dst, data)

    def move(self, src: str, dst: str) -> str:
        src_n = normalize(src)
        written = self.copy(src, dst)
        if written != src_n:
            del self.files[src_n]
        return written


class WorkspaceManager:
    """All user workspaces plus the textual OS-command front door."""

    def __init__(self):
        self._spaces: dict[str, Workspace] = {}

    def workspace(self, user: str) -> Workspace:
        if user not in self._spaces:
            self._spaces[user] = Workspace()
        return self._spaces[user]

    def run(self, user: str, verb: str, args: list[str]) -> str:
        """Execute one OS command; returns its textual output.

        upload takes (path, base64-data); download returns base64 so binary
        payloads survive the text channel.
        """
        ws = self.workspace(user)
        if verb == "ls":
            if len(args) > 1:
                raise WorkspaceError("usage: ls [path]")
            return "\n".join(ws.listing(args[0] if args else ""))
        if verb == "cat":
            if len(args) != 1:
                raise WorkspaceError("usage: cat <path>")
            return ws.read_file(args[0]).decode("utf-8", errors="replace")
        if verb == "cp":
            if len(args) != 2:
                raise WorkspaceError("usage: cp <src> <dst>")
            return ws.copy(args[0], args[1])
        if verb == "mv":
            if len(args) != 2:
                raise WorkspaceError("usage: mv <src> <dst>")
            return ws.move(args[0], args[1])
        if verb == "rm":
            if len(args) != 1:
                raise WorkspaceError("usage: rm <path>")
            return ws.remove(args[0])
        if verb == "mkdir":
            if len(args) != 1:
                raise WorkspaceError("usage: mkdir <path>")
            return ws.mkdir(args[0])
        if verb == "upload":
            if len(args) != 2:
                raise WorkspaceError("usage: upload <path> <base64-data>")
            try:
                data = base64.b64decode(args[1], validate=True)
            except Exception:
                raise WorkspaceError("upload payload is not valid base64") from None
            path = ws.write_file(args[0], data)
            return f"{path} {len(data)} bytes"
        if verb == "download":
            if len(args) != 1:
                raise WorkspaceError("usage: download <path>")
            return base64.b64encode(ws.read_file(args[0])).decode("ascii")
        raise WorkspaceError(f"unknown OS verb: {verb}")
