import argparse
import os
import sys
import logging
from log.logger import setup_logger
from datetime import datetime
import config.app_settings as APP_SETTINGS
from manager.environment_manager import EnvironmentManager
from manager.experiment_manager import ExperimentManager
from manager.file_manager import FileManager
from model.errors import ConfigError

def build_parser() -> argparse.ArgumentParser:
    """
    Command line of the experiment runner

    Returns:
        argparse.ArgumentParser: parser for `<command> --config <file> [options]`
    """
    parser = argparse.ArgumentParser(
        prog="volterra-lab",
        description="Run a verification experiment for Volterra-driven SDEs with singular drift."
    )
    parser.add_argument("command", choices=APP_SETTINGS.COMMANDS, help="experiment to run")
    parser.add_argument("--config", required=True, help="sectioned key = value config file")
    parser.add_argument("--output-dir", help="parent directory of the <hash> run directories")
    parser.add_argument("--threads", type=int, help="worker threads for ensemble generation")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return parser


def main(args, env_manager: EnvironmentManager, logger) -> int:
    """
    Main function for one experiment run

    Args:
        args (argparse.Namespace): parsed command line
        env_manager (EnvironmentManager): resolved environment
        logger (logging.Logger): Logger instance for logging messages

    Returns:
        Exit code (0 all criteria passed, 2 a criterion failed, 1 error)
    """
    try:
        logger.info(f"Starting '{args.command}' with config {args.config}")

        # Create an instance of the file manager
        file_manager = FileManager(env_manager)

        # Create experiment manager instance
        experiment_manager = ExperimentManager(
            app_settings=APP_SETTINGS,
            env_manager=env_manager,
            file_manager=file_manager
        )

        # Parse and validate the config (every error is reported at once)
        config = experiment_manager.load_config(args.config, args.command)

        # Run, persist and record
        manifest = experiment_manager.run(config)
        logger.info(f"Results written to {env_manager.run_directory}")
        return manifest.exit_code

    except ConfigError as e:
        for error in e.errors:
            logger.error(f"Config error: {error}")
        return 1
    except Exception as e:
        logger.error(f"Application error: {e}")
        return 1


if __name__ == "__main__":
    arguments = build_parser().parse_args()

    # Get project root
    current_dir = os.path.dirname(os.path.abspath(__file__))
    project_root = os.path.dirname(current_dir)

    # Setup env var manager (command line wins over the environment)
    env_manager = EnvironmentManager(project_root, arguments.output_dir, arguments.threads, arguments.log_level)

    # Setup the logger
    setup_logger(log_file=env_manager.log_file, level=env_manager.log_level)
    logger = logging.getLogger(__name__)

    start_time = datetime.now()

    try:
        exit_code = main(arguments, env_manager, logger)
    except KeyboardInterrupt:
        logger.warning("Run interrupted by user")
        exit_code = 130
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        exit_code = 1

    logger.info(f"Run completed with exit code {exit_code}")
    logger.info(f"Total execution time: {(datetime.now() - start_time).total_seconds():.1f} seconds")
    sys.exit(exit_code)
