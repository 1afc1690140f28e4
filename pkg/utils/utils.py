import csv
import hashlib
import io
import json
import os
import tempfile
from datetime import date, datetime
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np
from pydantic import BaseModel

PathLike = Union[str, Path]

# Пакеты, версии которых попадают в манифест запуска
MANIFEST_PACKAGES = ("numpy", "scipy", "pydantic", "pydantic-settings", "loguru", "python-dotenv")


def format_float(value: float) -> str:
    """Точное десятичное представление: 17 значащих цифр"""
    return format(float(value), ".17g")


def convert_to_serializable(data: Any) -> Any:
    """
    Преобразует данные в JSON-сериализуемый формат (отчёты, манифест, сводка).

    Args:
        data: Любые данные для преобразования

    Returns:
        JSON-сериализуемые данные
    """
    if data is None:
        return None

    if isinstance(data, BaseModel):
        return convert_to_serializable(data.model_dump())

    # Массивы numpy и скаляры numpy
    if isinstance(data, np.ndarray):
        return convert_to_serializable(data.tolist())
    if isinstance(data, np.generic):
        return convert_to_serializable(data.item())

    # Обработка списков и кортежей
    if isinstance(data, (list, tuple)):
        return [convert_to_serializable(item) for item in data]

    # Обработка словарей
    elif isinstance(data, dict):
        return {str(key): convert_to_serializable(value) for key, value in data.items()}

    elif isinstance(data, (datetime, date)):
        return data.isoformat()

    elif isinstance(data, float):
        # inf/nan в JSON не допускаются
        return data if np.isfinite(data) else str(data)

    # Базовые типы, которые уже сериализуемы
    elif isinstance(data, (int, str, bool)):
        return data

    elif isinstance(data, Path):
        return str(data)

    # Для всех остальных типов используем строковое представление
    else:
        return str(data)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Запись через временный файл в той же папке и os.replace:
    при сбое целевой файл не остаётся частично записанным.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return target


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write_text(path, render_csv(header, rows))


def write_json(path: PathLike, obj: Any) -> Path:
    text = json.dumps(convert_to_serializable(obj), ensure_ascii=False, indent=2, sort_keys=True)
    return atomic_write_text(path, text + "\n")


def read_csv(path: PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]


def config_hash(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def package_versions() -> dict[str, str]:
    versions = {}
    for name in MANIFEST_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not-installed"
    return versions
