import os
from pathlib import Path

from .base import BaseStorage


class LocalStorage(BaseStorage):
    """A client for interacting with local filesystem storage.

    Args:
        root (str): Directory every workspace is created under (default: cwd).
    """

    def __init__(self, root: str = "."):
        self.root = root

    def _workspace(self, workspace: str) -> str:
        if not workspace.endswith("/"):
            workspace += "/"
        return workspace

    def file_exist(self, workspace: str, filename: str) -> bool:
        """
        Check if a file exists in local storage

        Args:
            workspace (str): The workspace (prefix) path.
            filename (str): The name of the file.

        Returns:
            bool: True if the file exists, False otherwise.
        """
        return os.path.isfile(f"{self._workspace(workspace)}{filename}")

    def create_workspace(self, name: str) -> str:
        """Creates a workspace directory under the storage root.

        Args:
            name (str): Workspace name relative to the root.
        Returns:
            str: The prefix path for the workspace.
        """
        workspace_path = self._workspace(os.path.join(self.root, name))
        try:
            os.makedirs(workspace_path, exist_ok=True)
        except Exception as e:
            raise RuntimeError(f"Error creating local workspace directory: {e}")
        return workspace_path

    def save_bytes(self, workspace: str, filename: str, content: bytes) -> str:
        path = f"{self._workspace(workspace)}{filename}"
        try:
            with open(path, "wb") as file:
                file.write(content)
        except OSError as e:
            raise RuntimeError(f"Error saving file to local storage: {e}")
        return os.path.abspath(path)

    def save_text(self, workspace: str, filename: str, content: str) -> str:
        """Saves a text file to the specified workspace in local storage.

        Args:
            workspace (str): The workspace (prefix) path.
            filename (str): The name of the file to save.
            content (str): The content to save as text.

        Returns:
            str: The full path of the saved file on local filesystem.
        """
        path = f"{self._workspace(workspace)}{filename}"
        try:
            with open(path, "w") as file:
                file.write(content)
        except OSError as e:
            raise RuntimeError(f"Error saving file to local storage: {e}")
        return os.path.abspath(path)

    def atomic_save_text(self, workspace: str, filename: str, content: str) -> str:
        path = Path(f"{self._workspace(workspace)}{filename}")
        tmp_path = path.with_name(f".{path.name}.tmp")
        try:
            with open(tmp_path, "w") as file:
                file.write(content)
                file.flush()
                os.fsync(file.fileno())
            os.replace(tmp_path, path)
        except OSError as e:
            raise RuntimeError(f"Error saving file to local storage: {e}")
        return os.path.abspath(path)

    def read_bytes(self, workspace: str, filename: str) -> bytes:
        with open(f"{self._workspace(workspace)}{filename}", "rb") as file:
            return file.read()

    def read_text(self, workspace: str, filename: str) -> str:
        with open(f"{self._workspace(workspace)}{filename}") as file:
            return file.read()

    def list_files(self, workspace: str, suffix: str = "") -> list[str]:
        workspace = self._workspace(workspace)
        if not os.path.isdir(workspace):
            return []
        return sorted(
            name
            for name in os.listdir(workspace)
            if os.path.isfile(f"{workspace}{name}") and name.endswith(suffix)
        )
