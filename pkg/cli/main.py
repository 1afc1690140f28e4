"""
Пакетный запуск экспериментов: python run_experiment.py --config configs/simulate.json [--seed N] [--threads N]
[--strict] [--out DIR]; --schema печатает JSON-схему конфигурации, --describe NAME - описание системы.

Коды завершения: 0 - успех, 2 - ошибка конфигурации, 3 - численная ошибка,
4 - проверка не пройдена при --strict.
"""
import argparse
import json
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from cli.experiments import execute
from cli.schemas import ExperimentConfig
from config import settings
from dynamics import SYSTEMS, build_system
from logger_config import add_file_sinks, logger, remove_sinks
from utils.errors import AcceptanceFailure, ConfigurationError, ObliqueMVError
from utils.utils import config_hash, package_versions, write_json


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Моделирование уравнений Маккина-Власова с косым субдифференциалом")
    parser.add_argument("--config", type=str, help="JSON-файл конфигурации эксперимента")
    parser.add_argument("--seed", type=int, help="Зерно (заменяет seed из конфигурации)")
    parser.add_argument("--threads", type=int, help="Число потоков (по умолчанию OBLIQUE_MV_THREADS)")
    parser.add_argument("--strict", action="store_true", help="Код 4, если проверка не пройдена")
    parser.add_argument("--out", type=str, help="Папка результатов (заменяет output из конфигурации)")
    parser.add_argument("--schema", action="store_true", help="Напечатать JSON-схему конфигурации")
    parser.add_argument("--describe", type=str, metavar="NAME", help="Описание системы из библиотеки")
    return parser


def _error_location(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "config"


def load_config(path: Path, seed: Optional[int] = None, out: Optional[str] = None,
                threads: Optional[int] = None) -> tuple[ExperimentConfig, bytes]:
    """Чтение и проверка конфигурации; флаги командной строки заменяют поля файла"""
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigurationError(f"не удалось прочитать конфигурацию: {e}", field=str(path))
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"некорректный JSON (строка {e.lineno}, столбец {e.colno}): {e.msg}",
                                 field=str(path))
    if not isinstance(data, dict):
        raise ConfigurationError("конфигурация должна быть JSON-объектом", field=str(path))

    overrides = {"seed": seed, "output": out, "threads": threads}
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigurationError(f"{first['msg']} ({e.error_count()} ошибок)", field=_error_location(first))
    return cfg, raw


def describe(name: str) -> str:
    if name not in SYSTEMS:
        raise ConfigurationError(f"неизвестная система '{name}', доступны: {', '.join(sorted(SYSTEMS))}",
                                 field="system.name")
    return build_system(name).describe()


def _run_config(args: argparse.Namespace) -> int:
    cfg, raw = load_config(Path(args.config), args.seed, args.out, args.threads)
    if cfg.threads is not None:
        settings.runtime.threads = cfg.threads
    out = Path(cfg.output)
    sinks = add_file_sinks(out / "logs")
    try:
        result = execute(cfg, out)
        outputs = [str(p.relative_to(out)) if p.is_relative_to(out) else str(p) for p in result.outputs]
        write_json(out / "summary.json", {
            "mode": cfg.mode,
            "passed": result.passed,
            "summary": result.summary,
            "reports": result.reports,
        })
        # без отметки времени: повторный запуск даёт тот же файл
        write_json(out / "manifest.json", {
            "config_sha256": config_hash(raw),
            "seed": cfg.seed,
            "mode": cfg.mode,
            "versions": package_versions(),
            "outputs": sorted(outputs),
        })
        if args.strict and not result.passed:
            failed = [name for name, report in result.reports.items() if not getattr(report, "passed", True)]
            raise AcceptanceFailure(f"проверки не пройдены: {', '.join(failed)}", field=cfg.mode)
    finally:
        remove_sinks(sinks)
    return 0


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.schema:
            print(json.dumps(ExperimentConfig.model_json_schema(), ensure_ascii=False, indent=2))
            return 0
        if args.describe:
            print(describe(args.describe))
            return 0
        if not args.config:
            raise ConfigurationError("нужен --config, --schema или --describe", field="--config")
        return _run_config(args)
    except ObliqueMVError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code


def main(argv: Optional[List[str]] = None):
    raise SystemExit(run(argv))
