from service.config_parser_service import ConfigParserService
from service.path_service import PathService
from service.verification_service import VerificationService
from manager.environment_manager import EnvironmentManager
from manager.file_manager import FileManager
from model.errors import IoError
from model.experiment import CommandOutcome, ExperimentConfig, RunManifest
from utils.report.csv_builder import CsvBuilder
from utils.report.manifest_builder import ManifestBuilder
from utils.report.markdown_builder import MarkdownBuilder
import logging

class ExperimentManager:
    """
    Runs one experiment config end to end: parse, execute, persist, record.

    Attributes:
        app_settings: Application settings module
        env_manager (EnvironmentManager): run directories, threads and logging options
        file_manager (FileManager): atomic writes into the run directory
        config_parser (ConfigParserService): config parsing and canonical serialization
        csv_builder (CsvBuilder): pandas tables for paths, report and trace
        manifest_builder (ManifestBuilder): manifest.txt renderer
        logger (logging.Logger): Logger instance for logging messages
    """
    def __init__(self, app_settings, env_manager: EnvironmentManager, file_manager: FileManager):
        self.app_settings = app_settings
        self.env_manager = env_manager
        self.file_manager = file_manager
        self.config_parser = ConfigParserService()
        self.csv_builder = CsvBuilder()
        self.manifest_builder = ManifestBuilder()
        self.logger = logging.getLogger(__name__)

    def load_config(self, path: str, command: str = None) -> ExperimentConfig:
        """
        Parse a config file, optionally checking that it is written for the given command.

        Args:
            path (str): config file
            command (str): command named on the command line

        Returns:
            ExperimentConfig: the validated config
        """
        config = self.config_parser.load_file(path)
        if command is not None and config.command != command:
            self.logger.error(f"Config {path} is for '{config.command}', not '{command}'")
            raise ValueError(f"config command '{config.command}' does not match '{command}'")
        return config

    def run(self, config: ExperimentConfig) -> RunManifest:
        """
        Execute the command of a config and write its run directory.

        Args:
            config (ExperimentConfig): validated config

        Returns:
            RunManifest: finished manifest; its exit_code is 0, 1 or 2
        """
        manifest = RunManifest(config.config_hash, config.master_seed, self.app_settings.LIBRARY_VERSION,
                               config.command)
        self.env_manager.resolve(config.output_dir, config.threads)
        try:
            self.env_manager.open_run(config.config_hash)
        except OSError as e:
            self.logger.error(f"Cannot create the run directory: {e}")
            raise IoError(f"cannot create the run directory for {config.config_hash}: {e}") from e

        outcome = None
        try:
            verification = VerificationService(PathService(threads=self.env_manager.threads))
            outcome = verification.run(config)
            manifest.verdicts = list(outcome.verdicts)
            self.save_outcome(outcome, manifest)

        except Exception as e:
            self.logger.error(f"Run {config.config_hash} failed: {type(e).__name__}: {e}")
            manifest.errors.append(f"{type(e).__name__}: {e}")

        manifest.finish()
        self.save_manifest(manifest, config, outcome)
        self.logger.info(f"Run {config.config_hash} finished with exit code {manifest.exit_code}")
        return manifest

    def save_outcome(self, outcome: CommandOutcome, manifest: RunManifest):
        """
        Write paths.csv, report.csv and trace.csv and register them in the manifest.

        Returns:
            None
        """
        tables = []
        if outcome.ensemble is not None:
            tables.append(("paths.csv", self.csv_builder.build_paths(outcome.ensemble, self.app_settings.EXPORT_PATH_LIMIT)))
        tables.append(("report.csv", self.csv_builder.build_table(outcome.report_rows)))
        if outcome.trace_rows:
            tables.append(("trace.csv", self.csv_builder.build_table(outcome.trace_rows)))

        for filename, dataframe in tables:
            if not self.file_manager.save_csv(dataframe, filename):
                self.logger.error(f"Failed to write {filename}")
                raise IoError(f"could not write {filename} to {self.env_manager.run_directory}")
            manifest.add_file(filename, self.file_manager.checksum(filename), len(dataframe))

    def save_manifest(self, manifest: RunManifest, config: ExperimentConfig, outcome: CommandOutcome = None):
        """
        Write manifest.txt (and the summary.md next to it).

        Returns:
            None
        """
        canonical = self.config_parser.serialize_config(config)
        if not self.file_manager.save_text(self.manifest_builder.build(manifest, canonical), "manifest.txt"):
            self.logger.error("Failed to write the run manifest")
            raise IoError(f"could not write manifest.txt to {self.env_manager.run_directory}")

        summary = MarkdownBuilder().generate_run_summary(manifest, outcome)
        if not self.file_manager.save_markdown(summary, "summary.md"):
            self.logger.warning("Failed to write summary.md")
