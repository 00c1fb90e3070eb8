import logging

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

def resolve_level(level) -> int:
    """
    Turn a level name (any case) or number into a logging level, INFO when unknown.

    Args:
        level (int | str): e.g. "debug", "WARNING" or logging.ERROR

    Returns:
        int: logging level
    """
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def setup_logger(log_file: str = None, level=logging.INFO) -> int:
    """
    Setup the logger for a run.

    Numerical warnings raised through the warnings module (scipy integration
    warnings, numpy overflow) are routed into the same handlers.

    Args:
        log_file (str): Optional path to a file where logs should be written.
        level (int | str): Logging level, default is logging.INFO.

    Returns:
        int: the level that was applied
    """
    resolved = resolve_level(level)
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=resolved, format=LOG_FORMAT, handlers=handlers, force=True)
    logging.captureWarnings(True)
    return resolved
