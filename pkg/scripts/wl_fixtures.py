"""Separation verdicts of every refinement family on the fixture pairs."""

from __future__ import annotations

from ssx.complex import build_flag_complex
from ssx.fixtures import fixtures
from ssx.wl import dir_wl_compare, sswl_compare


def main() -> None:
    print(f"{'pair':<8} {'dir':<14} {'U':<14} {'D':<14}")
    for name, pair in sorted(fixtures().items()):
        a, b = build_flag_complex(pair.a), build_flag_complex(pair.b)
        verdicts = [dir_wl_compare(pair.a, pair.b), sswl_compare(a, b, "U"), sswl_compare(a, b, "D")]
        print(f"{name:<8} " + " ".join(f"{'SEPARATED' if v.separated else 'not':<14}" for v in verdicts))


if __name__ == "__main__":
    main()
