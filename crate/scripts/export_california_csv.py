"""Rebuild data/california_housing.csv from the 1990 census block-group table.

The raw table ships with the pytorch-widedeep wheel in the derived
(per-household average) form. Totals are recovered exactly:
households = population / ave_occup, totals = averages * households.

    pip download --no-deps pytorch-widedeep -d /tmp/wd
    python3 scripts/export_california_csv.py /tmp/wd/pytorch_widedeep-*.whl
"""
import io
import sys
import zipfile

import pandas as pd

MEMBER = "pytorch_widedeep/datasets/data/california_housing.parquet.brotli"


def main(wheel, out="data/california_housing.csv"):
    df = pd.read_parquet(io.BytesIO(zipfile.ZipFile(wheel).read(MEMBER)))
    households = (df.Population / df.AveOccup).round()
    out_df = pd.DataFrame(
        {
            "longitude": df.Longitude,
            "latitude": df.Latitude,
            "housing_median_age": df.HouseAge.round().astype(int),
            "total_rooms": (df.AveRooms * households).round().astype(int),
            "total_bedrooms": (df.AveBedrms * households).round().astype(int),
            "population": df.Population.round().astype(int),
            "households": households.astype(int),
            "median_income": df.MedInc,
            "median_house_value": (df.MedHouseVal * 100000).round().astype(int),
        }
    )
    out_df.to_csv(out, index=False)
    print(f"wrote {len(out_df)} rows to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
