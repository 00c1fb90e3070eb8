from manager.environment_manager import EnvironmentManager
import pandas as pd
import hashlib
import logging
import os

class FileManager:
    """
    Manages the files of a run directory.

    Every write goes to a temporary file that is renamed into place, so a reader never
    sees a half-written CSV or manifest.

    Attributes:
        env_manager (EnvironmentManager): The environment manager instance
        logger (logging.Logger): The logger instance for this class
    """
    def __init__(self, env_manager: EnvironmentManager):
        self.env_manager = env_manager
        self.logger = logging.getLogger(__name__)

    def save_csv(self, dataframe: pd.DataFrame, filename: str) -> bool:
        """
        Save a DataFrame as a CSV file into the run directory

        Args:
            dataframe (pd.DataFrame): Table to save
            filename (str): Name of the file to save

        Returns:
            bool: True if save was successful, False otherwise
        """
        # Validate extension
        if not filename.endswith('.csv'):
            self.logger.error("Filename must end with .csv")
            return False

        content = dataframe.to_csv(index=False, lineterminator='\n')
        if self._write_atomic(content, filename):
            self.logger.info(f"CSV with {len(dataframe)} rows written to {filename}")
            return True
        return False

    def save_text(self, content: str, filename: str) -> bool:
        """
        Save plain text (the run manifest) into the run directory

        Args:
            content (str): Text to save
            filename (str): Name of the file to save

        Returns:
            bool: True if save was successful, False otherwise
        """
        if self._write_atomic(content, filename):
            self.logger.info(f"Text written to {filename}")
            return True
        return False

    def save_markdown(self, content: str, filename: str) -> bool:
        """
        Save a Markdown file into the run directory

        Args:
            content (str): Markdown content to save
            filename (str): Name of the file to save

        Returns:
            bool: True if save was successful, False otherwise
        """
        # Validate extension
        if not filename.endswith('.md'):
            self.logger.error("Filename must end with .md")
            return False

        if self._write_atomic(content, filename):
            self.logger.info(f"Markdown written to {filename}")
            return True
        return False

    def checksum(self, filename: str) -> str:
        """
        SHA-256 of a written file

        Args:
            filename (str): Name of the file

        Returns:
            str: hex digest, or an empty string if the file cannot be read
        """
        try:
            file_path = self._construct_target_path(filename)
            digest = hashlib.sha256()
            with open(file_path, 'rb') as f:
                for block in iter(lambda: f.read(1 << 16), b''):
                    digest.update(block)
            return digest.hexdigest()

        except Exception as e:
            self.logger.warning(f"Failed to checksum {filename}: {e}")
            return ""

    def _write_atomic(self, content: str, filename: str) -> bool:
        """
        Write content next to its target and rename it into place

        Returns:
            bool: True if the file is in place, False otherwise
        """
        try:
            file_path = self._construct_target_path(filename)
            if file_path is None:
                return False

            temp_path = f"{file_path}.tmp"
            with open(temp_path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(content)
            os.replace(temp_path, file_path)
            return True

        except Exception as e:
            self.logger.error(f"Failed to write {filename}: {e}")
            return False

    def _construct_target_path(self, filename: str) -> str:
        """
        Path of a file inside the open run directory

        Args:
            filename (str): Name of the file

        Returns:
            str: Full file path, None when no run directory is open
        """
        target_dir = self.env_manager.run_directory
        if not target_dir:
            self.logger.error("No run directory has been opened")
            return None
        return os.path.join(target_dir, filename)
