#!/usr/bin/env python3
# Copyright 2026 The CatHarm Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Rebuilds the files under data/ from the upstream distributions.

German/Adult come from the UCI copies bundled in the `responsibly` wheel,
MNIST from the 5000-image subset bundled in the `mlxtend` wheel.

    pip download --no-deps responsibly mlxtend -d /tmp/wheels
    python3 tools/prepare_data.py /tmp/wheels data
"""
import glob
import gzip
import os
import struct
import sys
import zipfile

GERMAN_COLUMNS = [
    "status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "employment", "installment_rate", "personal_status",
    "other_debtors", "residence_since", "property", "age",
    "installment_plans", "housing", "existing_credits", "job",
    "people_liable", "telephone", "foreign_worker", "credit",
]
GERMAN_NUMERIC = {"duration", "credit_amount", "installment_rate",
                  "residence_since", "age", "existing_credits",
                  "people_liable"}

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]
ADULT_NUMERIC = {"age", "fnlwgt", "education_num", "capital_gain",
                 "capital_loss", "hours_per_week"}


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(r) + "\n")


def write_schema(path, columns, numeric, roles):
    with open(path, "w", newline="\n") as f:
        f.write("# column,kind,role\n")
        for c in columns:
            kind = "numeric" if c in numeric else "categorical"
            f.write(f"{c},{kind},{roles.get(c, 'feature')}\n")


def main(wheels, out):
    os.makedirs(out, exist_ok=True)
    resp = zipfile.ZipFile(glob.glob(os.path.join(wheels, "responsibly-*.whl"))[0])
    german = resp.read("responsibly/dataset/german/german.data").decode()
    rows = [line.split() for line in german.splitlines() if line.strip()]
    write_csv(os.path.join(out, "german.csv"), GERMAN_COLUMNS, rows)
    write_schema(os.path.join(out, "german.schema"), GERMAN_COLUMNS,
                 GERMAN_NUMERIC,
                 {"credit": "label", "age": "covariate",
                  "foreign_worker": "covariate"})

    adult = resp.read("responsibly/dataset/adult/adult.data").decode()
    rows = [[c.strip() for c in line.split(",")]
            for line in adult.splitlines() if line.strip()]
    write_csv(os.path.join(out, "adult.csv"), ADULT_COLUMNS, rows)
    write_schema(os.path.join(out, "adult.schema"), ADULT_COLUMNS,
                 ADULT_NUMERIC,
                 {"income": "label", "age": "covariate", "sex": "covariate",
                  "fnlwgt": "ignore"})

    mlx = zipfile.ZipFile(glob.glob(os.path.join(wheels, "mlxtend-*.whl"))[0])
    lines = gzip.decompress(
        mlx.read("mlxtend/data/data/mnist_5k.csv.gz")).decode().splitlines()
    pixels = bytearray()
    labels = bytearray()
    for line in lines:
        v = [int(x) for x in line.split(",")]
        pixels.extend(bytes(v[:784]))
        labels.append(v[784])
    n = len(labels)
    with open(os.path.join(out, "mnist5k-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(pixels)
    with open(os.path.join(out, "mnist5k-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
