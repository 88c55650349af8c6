"""Regenerate the bundled chart fixtures (stocks, co2)."""
import csv
import json
from pathlib import Path

HERE = Path(__file__).resolve().parent


def interpolate(anchors, keys):
    out = {}
    for (k0, v0), (k1, v1) in zip(anchors, anchors[1:]):
        for k in keys:
            if k0 <= k <= k1:
                t = 0.0 if k1 == k0 else (k - k0) / (k1 - k0)
                out[k] = round(v0 + t * (v1 - v0), 3)
    return [out[k] for k in keys]


def month_index(y, m):
    return y * 12 + (m - 1)


def stocks():
    anchors = {
        "Apple": [((2000, 1), 0.95), ((2000, 3), 1.48), ((2002, 10), 0.30), ((2006, 1), 2.40),
                  ((2006, 7), 1.90), ((2007, 11), 3.38), ((2007, 12), 2.80), ((2008, 1), 3.10),
                  ((2008, 12), 1.20), ((2009, 1), 1.70), ((2010, 12), 3.20)],
        "Google": [((2000, 1), 2.00), ((2000, 3), 2.60), ((2002, 10), 1.50), ((2006, 1), 4.60),
                   ((2006, 7), 4.10), ((2007, 11), 6.90), ((2007, 12), 6.00), ((2008, 1), 6.40),
                   ((2008, 12), 1.60), ((2009, 1), 1.62), ((2010, 12), 2.60)],
    }
    months = [(y, m) for y in range(2000, 2011) for m in range(1, 13)]
    keys = [month_index(y, m) for y, m in months]
    rows = []
    for company, pts in anchors.items():
        values = interpolate([(month_index(*ym), v) for ym, v in pts], keys)
        for (y, m), v in zip(months, values):
            rows.append((f"{y}-{m:02d}-01", company, f"{v:.3f}"))
    rows.sort()
    with open(HERE / "stocks.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["date", "company", "price"])
        w.writerows(rows)
    spec = {
        "title": "Stock Prices of Google and Apple, 2000-2010",
        "mark": "line",
        "encoding": {
            "x": {"field": "date", "type": "temporal", "title": "Date"},
            "y": {"field": "price", "type": "quantitative", "title": "Price"},
            "color": {"field": "company", "type": "nominal", "title": "Company"},
        },
    }
    (HERE / "stocks.spec.json").write_text(json.dumps(spec, indent=2) + "\n")


def co2():
    years = list(range(1750, 2021))
    anchors = {
        "United Kingdom": [(1750, 0.01), (1850, 0.12), (1913, 0.30), (1955, 0.35), (2020, 0.02)],
        "United States": [(1750, 0.0), (1850, 0.02), (1918, 0.90), (1932, 0.45), (1944, 1.25),
                          (1946, 0.95), (2007, 2.10), (2020, 0.90)],
        "India": [(1750, 0.0), (1950, 0.02), (2020, 1.80)],
    }
    series = {name: interpolate(pts, years) for name, pts in anchors.items()}
    with open(HERE / "co2.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["year"] + list(series))
        for i, y in enumerate(years):
            w.writerow([y] + [f"{series[n][i]:.3f}" for n in series])
    spec = {
        "title": "Annual CO2 Emissions by Country",
        "mark": {"type": "line"},
        "encoding": {
            "x": {"field": "year", "type": "temporal", "title": "Year"},
            "y": {"field": "emissions", "type": "quantitative", "title": "CO2 emissions (Gt)"},
            "color": {"field": "country", "type": "nominal", "title": "Country"},
        },
    }
    (HERE / "co2.spec.json").write_text(json.dumps(spec, indent=2) + "\n")


if __name__ == "__main__":
    stocks()
    co2()
