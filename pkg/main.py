#!/usr/bin/env python3
"""
函數空間 KL 散度估計工具
主程式入口點
"""
import sys
import traceback

from loguru import logger

from cli.argument_parser import parse_arguments


def main(argv=None):
    """主程式入口"""
    verbose = "--verbose" in (argv if argv is not None else sys.argv[1:])
    try:
        exit_code = parse_arguments(argv)
        if exit_code:
            sys.exit(exit_code)

        logger.info("程式執行完成")

    except KeyboardInterrupt:
        logger.info("使用者中斷程式執行")
        sys.exit(130)
    except Exception as e:
        logger.error(f"程式執行失敗: {str(e)}")
        if verbose:
            logger.error(traceback.format_exc())
        sys.exit(1)


if __name__ == "__main__":
    main()
