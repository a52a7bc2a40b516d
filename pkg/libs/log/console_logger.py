from datetime import datetime

from rich.console import Console

from libs.log.base_logger import ILogger, LogLevel

LEVEL_STYLES = {
    LogLevel.DEBUG: "dim",
    LogLevel.INFO: "cyan",
    LogLevel.WARNING: "yellow",
    LogLevel.ERROR: "red",
    LogLevel.CRITICAL: "bold red",
}


class ConsoleLogger(ILogger):
    def __init__(
        self,
        name: str = "ConsoleLogger",
        min_level: LogLevel | None = None,
        console: Console | None = None,
    ):
        super().__init__(name, min_level)
        self.console = console or Console(stderr=True)

    def _get_timestamp(self) -> str:
        return datetime.now().isoformat(timespec="seconds")

    def _log(self, level: LogLevel, message: str) -> None:
        self.console.print(
            self._format(level, message),
            style=LEVEL_STYLES.get(level),
            markup=False,
            highlight=False,
        )
