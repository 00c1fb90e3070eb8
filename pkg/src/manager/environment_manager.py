from dotenv import load_dotenv # type: ignore
import os
import logging
import config.app_settings as APP_SETTINGS

class EnvironmentManager:
    """
    Resolves run directories, worker count and logging options from the environment.

    Precedence is command line, then environment (including an optional .env at the
    project root), then the config file, then the library defaults.

    Attributes:
        project_root (str): directory holding the optional .env file
        env_path (str): path of the .env file
        output_directory (str): parent of the per-run <hash> directories
        threads (int): worker pool size
        log_level (str): logging level name
        log_file (str | None): log file path, None to log to the console only
        run_directory (str | None): <output_directory>/<hash> once a run has been opened
    """
    def __init__(self, project_root: str, output_dir: str = None, threads: int = None, log_level: str = None):
        self.project_root = project_root
        self.env_path = os.path.join(project_root, ".env")
        self.logger = logging.getLogger(__name__)

        # Env variables
        self.output_directory = None
        self.threads = None
        self.log_level = None
        self.log_file = None

        # Set once a run is opened
        self.run_directory = None

        self._load_env_vars()

        # Explicit arguments win over the environment
        if output_dir:
            self.output_directory = output_dir
        if threads:
            self.threads = int(threads)
        if log_level:
            self.log_level = log_level

    def _load_env_vars(self):
        """
        Load the optional .env file and read the VOLTERRA_* variables

        Returns:
            None
        """
        if os.path.exists(self.env_path):
            load_dotenv(self.env_path)
            self.logger.info(f"Loaded environment overrides from {self.env_path}")

        self.output_directory = os.getenv("VOLTERRA_OUTPUT_DIR")
        self.log_level = os.getenv("VOLTERRA_LOG_LEVEL", "INFO")
        self.log_file = os.getenv("VOLTERRA_LOG_FILE", APP_SETTINGS.LOG_FILE) or None

        threads = os.getenv("VOLTERRA_THREADS")
        if threads:
            try:
                self.threads = max(1, int(threads))
            except ValueError:
                self.logger.warning(f"Ignoring non-integer VOLTERRA_THREADS={threads}")

    def resolve(self, config_output_dir: str = None, config_threads: int = None):
        """
        Fill the settings still unset from the experiment config, then from the defaults

        Args:
            config_output_dir (str): [run] output_dir of the config
            config_threads (int): [run] threads of the config

        Returns:
            None
        """
        if not self.output_directory:
            self.output_directory = config_output_dir or os.path.join(self.project_root, "runs")
        if not self.threads:
            self.threads = config_threads or os.cpu_count() or 1

    def open_run(self, config_hash: str) -> str:
        """
        Create (or reuse) the directory of one run

        Args:
            config_hash (str): run identifier

        Returns:
            str: the run directory
        """
        if not self.output_directory:
            self.resolve()
        self.run_directory = os.path.join(self.output_directory, config_hash)
        os.makedirs(self.run_directory, exist_ok=True)
        self.logger.info(f"Run directory: {self.run_directory}")
        return self.run_directory
