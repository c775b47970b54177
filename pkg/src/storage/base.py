from abc import ABC, abstractmethod


class BaseStorage(ABC):
    """
    Abstract base class for artefact storage.

    Every artefact writer (dataset shards, weight files, plan traces, reports,
    PNG renders) goes through this interface, so workspaces and file naming
    stay in one place.
    """

    @abstractmethod
    def file_exist(self, workspace: str, filename: str) -> bool:
        """
        Check if a file exists.

        Args:
            workspace (str): The workspace (prefix) path.
            filename (str): The name of the file.

        Returns:
            bool: True if the file exists, False otherwise.
        """

    @abstractmethod
    def create_workspace(self, name: str) -> str:
        """Creates a workspace (prefix) for one run artefact group.

        Args:
            name (str): Workspace name relative to the storage root
                (e.g. "datasets/grasp").

        Returns:
            str: The workspace path/prefix, ending with "/".

        Raises:
            RuntimeError: If workspace creation fails.
        """
        pass

    @abstractmethod
    def save_bytes(self, workspace: str, filename: str, content: bytes) -> str:
        """Saves binary content and returns its absolute path."""
        pass

    @abstractmethod
    def save_text(self, workspace: str, filename: str, content: str) -> str:
        """Saves text content and returns its absolute path."""
        pass

    @abstractmethod
    def atomic_save_text(self, workspace: str, filename: str, content: str) -> str:
        """Saves text so that readers see either the old file or the full new one."""
        pass

    @abstractmethod
    def read_bytes(self, workspace: str, filename: str) -> bytes:
        """Reads binary content.

        Raises:
            FileNotFoundError: If the file does not exist.
        """
        pass

    @abstractmethod
    def read_text(self, workspace: str, filename: str) -> str:
        """Reads text content.

        Raises:
            FileNotFoundError: If the file does not exist.
        """
        pass

    @abstractmethod
    def list_files(self, workspace: str, suffix: str = "") -> list[str]:
        """Lists file names in a workspace (sorted), optionally filtered by suffix."""
        pass
