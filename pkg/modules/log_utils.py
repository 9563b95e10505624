# ============================================================================
# MODULE: LOG UTILITIES
# ============================================================================
# Console + file logging shared by every module
# ============================================================================

import sys
from datetime import datetime

from colorama import Fore, Style, init as colorama_init

import config

colorama_init()


def _colored(message: str, color: str) -> str:
    if not config.USE_COLOR:
        return message
    return f"{color}{message}{Style.RESET_ALL}"


def _append(log_file: str, entry: str):
    if not log_file:
        return
    with open(log_file, 'a', encoding='utf-8') as logf:
        logf.write(entry)


def log_message(message: str, log_file: str = None):
    """Log to console (stderr) and file with timestamp."""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(_colored(message, Fore.CYAN if message.startswith("✅") else ""), file=sys.stderr)
    _append(log_file or config.MASTER_LOG, f"[{timestamp}] {message}\n")


def log_warning(message: str, log_file: str = None):
    """Log a warning; same sinks as log_message, highlighted on the console."""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(_colored(f"⚠️ {message}", Fore.YELLOW), file=sys.stderr)
    _append(log_file or config.MASTER_LOG, f"[{timestamp}] WARNING {message}\n")


def log_failure(step: str, error: str, log_file: str = None):
    """Log failure to the failure log and the console."""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    log_entry = f"[{timestamp}] FAILED STEP '{step}': {error}\n"
    print(_colored(f"💥 {log_entry.strip()}", Fore.RED), file=sys.stderr)
    _append(log_file or config.FAILED_LOG, log_entry)
