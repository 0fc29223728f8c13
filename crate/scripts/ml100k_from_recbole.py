#!/usr/bin/env python3
"""Rebuild the MovieLens-100K flat files (u.data, u.user, u.item) from the
copy bundled inside the RecBole wheel.

Use this on machines that cannot reach files.grouplens.org but can reach a
PyPI mirror:

    pip download --no-deps -d /tmp/wheels recbole==1.2.1
    python3 scripts/ml100k_from_recbole.py /tmp/wheels/recbole-1.2.1-py3-none-any.whl data/ml-100k

RecBole's atomic files drop the release-date / video-date / URL columns and
the "(year)" suffix of titles. The release year is kept as 01-Jan-<year>;
the remaining columns are written empty. Ratings, users and genre flags are
carried over unchanged.
"""

import sys
import zipfile
from pathlib import Path

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]
PREFIX = "recbole/dataset_example/ml-100k/ml-100k"


def rows(zf, suffix):
    text = zf.read(f"{PREFIX}.{suffix}").decode("utf-8")
    lines = text.splitlines()
    return [line.split("\t") for line in lines[1:] if line]


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    wheel, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        inter = rows(zf, "inter")
        users = rows(zf, "user")
        items = rows(zf, "item")

    with open(out / "u.data", "w") as f:
        for user, item, rating, ts in inter:
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}\n")

    with open(out / "u.user", "w") as f:
        for user, age, gender, occupation, zipcode in users:
            f.write(f"{user}|{age}|{gender}|{occupation}|{zipcode}\n")

    with open(out / "u.item", "w", encoding="latin-1", errors="replace") as f:
        for fields in items:
            item, title, year, classes = (fields + [""] * 4)[:4]
            tags = set(classes.split())
            flags = "|".join("1" if g in tags else "0" for g in GENRES)
            date = f"01-Jan-{year}" if year else ""
            # video release date and IMDb URL are not in the atomic files
            f.write(f"{item}|{title}|{date}|||{flags}\n")

    print(f"wrote {len(inter)} ratings, {len(users)} users, {len(items)} movies to {out}")


if __name__ == "__main__":
    main()
