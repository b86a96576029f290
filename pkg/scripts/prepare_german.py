"""Convert UCI German Credit (``german.data``) into a binned CSV and schema.

    python3 scripts/prepare_german.py path/to/german.data --out data/german

Writes ``german.csv`` and ``german_schema.json``. Gender is derived from the
personal-status attribute and marked protected. Numeric attributes are binned
into at most 10 ordinal levels so that surrogate splits stay coarse.
"""

import argparse
from pathlib import Path

from fairtest_sym.schema import Dataset, Feature, FeatureSchema, write_csv, write_schema

# (name, number of categorical codes) for the A-coded attributes, or None for numeric
COLUMNS = [
    ("checking", 4), ("duration", None), ("history", 5), ("purpose", 11), ("amount", None),
    ("savings", 5), ("employment", 5), ("installment_rate", None), ("personal_status", 5),
    ("debtors", 3), ("residence", None), ("property", 4), ("age", None), ("other_plans", 3),
    ("housing", 3), ("existing_credits", None), ("job", 4), ("dependents", None),
    ("telephone", 2), ("foreign", 2),
]

BINS = {
    "duration": lambda v: min(9, v // 8),
    "amount": lambda v: min(9, v // 2000),
    "age": lambda v: min(9, max(0, (v - 19) // 6)),
    "installment_rate": lambda v: v - 1,
    "residence": lambda v: v - 1,
    "existing_credits": lambda v: v - 1,
    "dependents": lambda v: v - 1,
}
NUMERIC_DOMAINS = {"duration": 9, "amount": 9, "age": 9, "installment_rate": 3, "residence": 3,
                   "existing_credits": 3, "dependents": 1}
FEMALE = {"A92", "A95"}


def category_code(token: str, attribute: int) -> int:
    # codes are A<attribute><k> with k counting from 0 or 1 depending on the attribute
    suffix = int(token[1 + len(str(attribute)):])
    first = {1: 1, 3: 0, 4: 0, 6: 1, 7: 1, 9: 1, 10: 1, 12: 1, 14: 1, 15: 1, 17: 1, 19: 1, 20: 1}[attribute]
    return suffix - first


def schema() -> FeatureSchema:
    features = []
    for name, k in COLUMNS:
        if name == "personal_status":
            features.append(Feature("gender", 0, 1, "categorical", ("male", "female")))
        elif k is None:
            features.append(Feature(name, 0, NUMERIC_DOMAINS[name]))
        else:
            features.append(Feature(name, 0, k - 1, "categorical", tuple(f"c{i}" for i in range(k))))
    return FeatureSchema(tuple(features), frozenset({"gender"}), "good_credit")


def convert(path: Path) -> Dataset:
    rows, labels = [], []
    for line in path.read_text().splitlines():
        tokens = line.split()
        if not tokens:
            continue
        row = []
        for attribute, ((name, k), tok) in enumerate(zip(COLUMNS, tokens), start=1):
            if name == "personal_status":
                row.append(int(tok in FEMALE))
            elif k is None:
                row.append(BINS[name](int(tok)))
            else:
                row.append(category_code(tok, attribute))
        rows.append(tuple(row))
        labels.append(1 if tokens[20] == "1" else 0)
    data = Dataset(schema(), tuple(rows), tuple(labels))
    for r in data.rows:
        data.schema.validate(r)
    return data


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("source", type=Path, help="german.data from the UCI repository")
    p.add_argument("--out", type=Path, default=Path("data/german"))
    args = p.parse_args()
    data = convert(args.source)
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(data, args.out / "german.csv")
    write_schema(data.schema, args.out / "german_schema.json")
    print(f"{len(data)} rows, {sum(data.labels)} good -> {args.out}")


if __name__ == "__main__":
    main()
