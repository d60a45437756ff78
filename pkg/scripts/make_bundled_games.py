#!/usr/bin/env python3
"""Regenerate the bundled game files under src/stogame/data/."""

import pathlib

from stogame.game import save_game
from stogame.generators import BUNDLED

DATA = pathlib.Path(__file__).resolve().parent.parent / "src" / "stogame" / "data"


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    for name, make in sorted(BUNDLED.items()):
        path = DATA / f"{name}.json"
        save_game(make(), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
