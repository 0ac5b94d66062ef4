'''Kolorowe komunikaty w konsoli (stderr; stdout zostaje dla JSON)'''

import sys

from colorama import init, Fore, Style

init(autoreset=True)

_verbose = True


def set_verbose(enabled: bool) -> None:
    global _verbose
    _verbose = bool(enabled)


def is_verbose() -> bool:
    return _verbose


def header(message: str) -> None:
    if _verbose:
        print(f"{Fore.CYAN}=== {message} ==={Style.RESET_ALL}", file=sys.stderr)


def info(message: str) -> None:
    if _verbose:
        print(f"{Fore.YELLOW}{message}{Style.RESET_ALL}", file=sys.stderr)


def success(message: str) -> None:
    if _verbose:
        print(f"{Fore.GREEN}✓ {message}{Style.RESET_ALL}", file=sys.stderr)


def warning(message: str) -> None:
    print(f"{Fore.YELLOW}! {message}{Style.RESET_ALL}", file=sys.stderr)


def error(message: str) -> None:
    print(f"{Fore.RED}✗ {message}{Style.RESET_ALL}", file=sys.stderr)
