from abc import ABC, abstractmethod
import enum

from libs.config.app_config import AppConfig


class LogLevel(enum.Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"

    @property
    def rank(self) -> int:
        return list(LogLevel).index(self)

    @staticmethod
    def from_string(level: str) -> "LogLevel":
        return LogLevel[level.upper()]


class ILogger(ABC):
    def __init__(self, name: str = "Logger", min_level: LogLevel | None = None):
        self.name = name
        self.min_level = min_level or LogLevel.from_string(AppConfig.LOG_LEVEL)

    @abstractmethod
    def _get_timestamp(self) -> str:
        raise NotImplementedError("")

    @abstractmethod
    def _log(self, level: LogLevel, message: str) -> None:
        """Write a message that already passed the level filter."""
        raise NotImplementedError("")

    def _format(self, level: LogLevel, message: str) -> str:
        return f"[{self._get_timestamp()}] [{self.name}] [{level.value}] {message}"

    def log(self, level: LogLevel, message: str) -> None:
        if level.rank < self.min_level.rank:
            return
        self._log(level, message)

    def debug(self, message: str) -> None:
        self.log(LogLevel.DEBUG, message)

    def info(self, message: str) -> None:
        self.log(LogLevel.INFO, message)

    def warning(self, message: str) -> None:
        self.log(LogLevel.WARNING, message)

    def error(self, message: str) -> None:
        self.log(LogLevel.ERROR, message)

    def critical(self, message: str) -> None:
        self.log(LogLevel.CRITICAL, message)
