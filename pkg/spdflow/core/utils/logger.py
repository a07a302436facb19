import logging
from datetime import datetime
from pathlib import Path

CONSOLE_FORMAT = "%(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logger(output_path: Path, console_level=logging.INFO):
    """
    Attach console and file handlers to ``spdflow_logger`` for one run.

    The file handler records DEBUG messages (Fréchet iterations, condition numbers,
    greedy channel steps) in ``<output_path>/logs/<YYYYmmdd_HHMM>.log``. A logger
    that already has handlers is returned unchanged; ``flow.reset_logger`` detaches
    them between runs.
    """
    logger = logging.getLogger("spdflow_logger")
    if logger.handlers:
        return logger
    logger.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(console_level)
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))

    log_folder = Path(output_path) / "logs"
    log_folder.mkdir(parents=True, exist_ok=True)
    start_time = datetime.now().strftime("%Y%m%d_%H%M")
    file_handler = logging.FileHandler(log_folder / f"{start_time}.log")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT))

    logger.addHandler(console_handler)
    logger.addHandler(file_handler)
    return logger
