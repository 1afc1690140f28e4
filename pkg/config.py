import configparser
from pathlib import Path
from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict
import os
from typing import Optional

# Загружаем переменные окружения
load_dotenv()

# Читаем конфигурационный файл
config = configparser.ConfigParser()
# Список возможных путей к config.ini
possible_paths = [
    'config.ini',  # Текущая директория
    os.path.join(os.path.dirname(__file__), 'config.ini'),  # Рядом с config.py
    os.environ.get('CONFIG_INI_PATH', ''),  # Из переменной окружения
    os.path.join(Path(__file__).parent.parent, 'config.ini'),  # Корень проекта
]

config_ini_path = None
for path in possible_paths:
    if path and os.path.exists(path):
        config_ini_path = path
        break

if config_ini_path:
    config.read(config_ini_path, encoding='utf-8')
else:
    raise FileNotFoundError(f"❌ Не найден файл config.ini (искали: {[p for p in possible_paths if p]})")


class Tolerances(BaseSettings):
    """Иерархия допусков, общая для всех модулей"""
    model_config = SettingsConfigDict(env_prefix="OBLIQUE_MV_TOL_")

    arithmetic: float = config.getfloat('tolerances', 'arithmetic')
    geometric: float = config.getfloat('tolerances', 'geometric')
    composite: float = config.getfloat('tolerances', 'composite')
    grid: float = config.getfloat('tolerances', 'grid')


class Iteration(BaseSettings):
    """Лимиты итерационных процедур"""
    model_config = SettingsConfigDict(env_prefix="OBLIQUE_MV_ITER_")

    dykstra_sweeps: int = config.getint('iteration', 'dykstra_sweeps')
    skorohod_iterations: int = config.getint('iteration', 'skorohod_iterations')
    jacobi_sweeps: int = config.getint('iteration', 'jacobi_sweeps')
    blowup_bound: float = config.getfloat('iteration', 'blowup_bound')
    control_family_limit: int = config.getint('iteration', 'control_family_limit')
    max_clusters: int = config.getint('iteration', 'max_clusters')


class Runtime(BaseSettings):
    """Параметры запуска: потоки, частицы, зерно"""
    # OBLIQUE_MV_THREADS - запасной вариант для флага --threads
    model_config = SettingsConfigDict(env_prefix="OBLIQUE_MV_")

    threads: int = config.getint('runtime', 'threads')
    particles: int = config.getint('runtime', 'particles')
    seed: int = config.getint('runtime', 'seed')
    lipschitz_pairs: int = config.getint('runtime', 'lipschitz_pairs')
    nested_budget: int = config.getint('runtime', 'nested_budget')


class LoggingConf(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="OBLIQUE_MV_LOG_")

    level: str = config.get('logging', 'level')
    directory: str = config.get('logging', 'directory')
    rotation: str = config.get('logging', 'rotation')
    retention: str = config.get('logging', 'retention')


class Settings(BaseSettings):
    tolerances: Tolerances = Tolerances()
    iteration: Iteration = Iteration()
    runtime: Runtime = Runtime()
    logging: LoggingConf = LoggingConf()

    # Дополнительные настройки
    debug: bool = os.environ.get("DEBUG", "False").lower() == "true"
    config_path: Optional[str] = config_ini_path


settings = Settings()
