from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
EXAMPLES_FILE = "examples.json"


@dataclass(frozen=True)
class TableRecord:
    finite_values: Tuple[str, ...]
    phi_f: str
    phi_g: str
    psi: str
    phi: str


@dataclass(frozen=True)
class ExampleRecord:
    id: str
    title: str
    description: str
    model: str
    functions: Dict[str, str]
    values: Tuple[str, ...]
    cm: Tuple[bool, ...]
    patterns: Dict[str, Tuple[Tuple[int, int], ...]]
    table: Optional[TableRecord] = None
    alpha: Optional[str] = None
    implications: Tuple[Tuple[str, str], ...] = ()
    rmin: float = 2.0
    rmax: Optional[float] = None
    rmax_periods: Optional[float] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)
    aliases: Tuple[str, ...] = ()


class DataLoaderError(RuntimeError):
    """Raised when a data set cannot be loaded."""


def _load_json_file(path: Path) -> list:
    if not path.exists():
        raise DataLoaderError(f"数据文件缺失: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise DataLoaderError(f"无法解析数据文件 {path}: {exc}") from exc


def _table(item: Optional[dict]) -> Optional[TableRecord]:
    if item is None:
        return None
    return TableRecord(
        finite_values=tuple(item["finite_values"]),
        phi_f=item["phi_f"],
        phi_g=item["phi_g"],
        psi=item["psi"],
        phi=item["phi"],
    )


def load_examples(path: Optional[Path] = None) -> List[ExampleRecord]:
    raw_items = _load_json_file(path or DATA_DIR / EXAMPLES_FILE)
    result: List[ExampleRecord] = []
    for item in raw_items:
        try:
            values = tuple(item["values"])
            cm = tuple(bool(flag) for flag in item["cm"])
            if len(cm) != len(values):
                raise DataLoaderError(f"例子 {item['id']} 的 cm 标记数目与共享值不符")
            result.append(
                ExampleRecord(
                    id=item["id"].strip(),
                    title=item.get("title", ""),
                    description=item.get("description", ""),
                    model=item["model"],
                    functions=dict(item.get("functions", {})),
                    values=values,
                    cm=cm,
                    patterns={key: tuple(tuple(pair) for pair in pairs)
                              for key, pairs in item.get("patterns", {}).items()},
                    table=_table(item.get("table")),
                    alpha=item.get("alpha"),
                    implications=tuple(tuple(pair) for pair in item.get("implications", [])),
                    rmin=float(item.get("rmin", 2.0)),
                    rmax=float(item["rmax"]) if item.get("rmax") is not None else None,
                    rmax_periods=float(item["rmax_periods"]) if item.get("rmax_periods") is not None else None,
                    notes=tuple(item.get("notes", [])),
                    aliases=tuple(alias.strip() for alias in item.get("aliases", [])),
                )
            )
        except KeyError as exc:
            raise DataLoaderError(f"例子数据缺失字段: {exc}") from exc
    if not result:
        raise DataLoaderError("例子数据为空")
    return result


def load_example(example_id: str) -> ExampleRecord:
    for record in load_examples():
        if example_id == record.id or example_id in record.aliases:
            return record
    raise KeyError(example_id)
