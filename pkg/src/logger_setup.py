import logging
import os

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(log_level_str='INFO', log_file='logs/app.log'):
    """
    Configures the root logger for the simulator.

    Args:
        log_level_str (str): Level name such as 'INFO' or 'DEBUG'.
        log_file (str): Path of the log file. Empty or None disables file logging.

    Returns:
        logging.Logger: The configured root logger.
    """
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            try:
                os.makedirs(log_dir)
            except OSError as e:
                # logger isn't configured yet
                print(f"Error creating log directory {log_dir}: {e}. Logging to current directory if possible.")
                log_file = os.path.basename(log_file) or 'app.log'

    numeric_level = getattr(logging, str(log_level_str).upper(), None)
    if not isinstance(numeric_level, int):
        print(f"Warning: Invalid log level string '{log_level_str}'. Defaulting to INFO.")
        numeric_level = logging.INFO

    formatter = logging.Formatter(LOG_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Re-initialisation (tests, repeated CLI calls) must not duplicate output.
    if root_logger.hasHandlers():
        for handler in list(root_logger.handlers):
            if isinstance(handler, logging.FileHandler):
                handler.close()
        root_logger.handlers.clear()

    if log_file:
        try:
            fh = logging.FileHandler(log_file, mode='a')
            fh.setFormatter(formatter)
            root_logger.addHandler(fh)
        except OSError as e:
            print(f"Error: Could not open log file {log_file} for writing: {e}. File logging disabled.")

    sh = logging.StreamHandler()
    sh.setFormatter(formatter)
    root_logger.addHandler(sh)

    return root_logger
