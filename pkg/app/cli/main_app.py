from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from app.cli import commands
from app.core.config import FORMATS, ConfigError, RunConfig

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"


class UsageError(Exception):
    """Raised instead of argparse's exit so that usage errors map to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="key = value 格式的配置文件")
    parser.add_argument("--rmin", type=float, default=None)
    parser.add_argument("--rmax", type=float, default=None)
    parser.add_argument("--rcount", type=int, default=None, help="半径网格点数")
    parser.add_argument("--linear", dest="geometric", action="store_false", default=None,
                        help="使用等差而非等比的半径网格")
    parser.add_argument("--tol-quad", dest="tol_quad", type=float, default=None)
    parser.add_argument("--tol-root", dest="tol_root", type=float, default=None)
    parser.add_argument("--slack-floor", dest="slack_floor", type=float, default=None)
    parser.add_argument("--out", type=str, default=None, help="输出目录")
    parser.add_argument("--format", choices=FORMATS, default=None)


def _add_source(parser: argparse.ArgumentParser, positional: bool = True) -> None:
    if positional:
        parser.add_argument("example", nargs="?", default=None, help="例子 id")
    parser.add_argument("--f", dest="f_expr", default=None, help="f 的规范文本")
    parser.add_argument("--g", dest="g_expr", default=None, help="g 的规范文本")
    parser.add_argument("--values", default=None, help="逗号分隔的共享值, 例如 0,∞,1,-1")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nevlab", description="亚纯函数分担值的计算实验室")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    verify = sub.add_parser("verify", help="精确验证一个例子")
    _add_source(verify)
    _add_common(verify)

    table = sub.add_parser("table", help="重新计算 Φ_f, Φ_g, Ψ, Φ 表")
    _add_common(table)

    profile = sub.add_parser("profile", help="计算 T, m, N, N̄, N_s 剖面")
    _add_source(profile)
    _add_common(profile)

    check = sub.add_parser("check", help="在剖面上检验定理中的不等式")
    check.add_argument("example", nargs="?", default=None, help="例子 id")
    check.add_argument("which", choices=commands.CHECKS)
    _add_source(check, positional=False)
    _add_common(check)

    catalog = sub.add_parser("catalog", help="列出或导出例子")
    catalog.add_argument("which", choices=("list", "describe", "export"), nargs="?", default="list")
    _add_source(catalog)
    _add_common(catalog)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.WARNING
    elif verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return commands.EXIT_USAGE
    _configure_logging(args.verbose, args.quiet)
    try:
        config = RunConfig.from_sources(args, getattr(args, "config", None))
    except ConfigError as exc:
        logger.error("%s", exc)
        return commands.EXIT_USAGE
    logger.debug("config: %s", config)
    return commands.dispatch(config)


def run() -> None:
    sys.exit(main())
