import sys
from pathlib import Path
from typing import List, Optional, Union

from loguru import logger

from config import settings

CONSOLE_FORMAT = ("<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
                  "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>")
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"

# Настройка loguru
logger.remove()

# Добавляем обработчик для вывода в консоль
logger.add(
    sys.stderr,
    format=CONSOLE_FORMAT,
    level=settings.logging.level,
    colorize=True
)


def add_file_sinks(log_dir: Optional[Union[str, Path]] = None) -> List[int]:
    """
    Файловые обработчики: общий журнал запуска, отдельный файл ошибок и DEBUG.
    Вызывается из CLI, чтобы импорт библиотеки не создавал папку logs.
    Возвращает идентификаторы обработчиков для logger.remove.
    """
    logs_dir = Path(log_dir or settings.logging.directory)
    logs_dir.mkdir(parents=True, exist_ok=True)

    sinks = [logger.add(
        logs_dir / "run.log",
        format=FILE_FORMAT,
        level="INFO",
        rotation=settings.logging.rotation,
        retention=settings.logging.retention,
        compression="zip"
    )]

    # Для ошибок добавляем отдельный файл
    sinks.append(logger.add(
        logs_dir / "errors.log",
        format=FILE_FORMAT,
        level="ERROR",
        rotation=settings.logging.rotation,
        retention=settings.logging.retention,
        compression="zip"
    ))

    sinks.append(logger.add(
        logs_dir / "debug.log",
        format=FILE_FORMAT,
        level="DEBUG",
        rotation=settings.logging.rotation,
        retention="7 days",  # Debug логи храним меньше
        compression="zip"
    ))

    logger.debug(f"✅ Файловые логи подключены: {logs_dir}")
    return sinks


def remove_sinks(sinks: List[int]):
    for sink in sinks:
        logger.remove(sink)
