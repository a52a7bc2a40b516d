from datetime import datetime
from pathlib import Path
from threading import Lock

from libs.config.app_config import AppConfig
from libs.log.base_logger import ILogger, LogLevel

# Loggers of different services may share one file.
_WRITE_LOCK = Lock()


class FileLogger(ILogger):
    def __init__(
        self,
        name: str = "FileLogger",
        filepath: str | None = None,
        min_level: LogLevel | None = None,
    ):
        super().__init__(name, min_level)
        self.filepath = Path(filepath or AppConfig.LOG_FILE_PATH).expanduser()
        self._create_file()

    def _create_file(self):
        if self.filepath.exists():
            return

        self.filepath.parent.mkdir(parents=True, exist_ok=True)
        self.filepath.touch()

    def _get_timestamp(self) -> str:
        return datetime.now().isoformat(timespec="milliseconds")

    def _log(self, level: LogLevel, message: str) -> None:
        with _WRITE_LOCK, open(self.filepath, "a") as file:
            file.write(self._format(level, message) + "\n")
