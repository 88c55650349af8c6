"""Regenerate the bundled mini-corpus.

Usage: python3 data/make_corpus.py path/to/chartinsight

Data are piecewise linear between anchor years, so peak counts are exact.
Summaries are written by hand; the two external models are a direct prompt
("llm-direct") and a template captioner ("template"). Annotations mark one
hallucination each.
"""
import csv
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent / "mini-corpus"


def interpolate(anchors, years):
    out = []
    for y in years:
        for (y0, v0), (y1, v1) in zip(anchors, anchors[1:]):
            if y0 <= y <= y1:
                out.append(round(v0 + (v1 - v0) * (y - y0) / (y1 - y0), 3))
                break
    return out


ENTRIES = [
    {
        "id": "bakery-sales",
        "complexity": "simple",
        "title": "Annual Bakery Sales, 2000-2015",
        "y": ("sales", "Sales (thousand loaves)"),
        "years": (2000, 2015),
        "series": {"Sales": [(2000, 12), (2008, 40), (2015, 22)]},
        "gold": [
            'The line chart "Annual Bakery Sales, 2000-2015" shows sales in thousands of loaves by year.',
            "Sales rose steadily from 12 in 2000 to a peak of 40 in 2008.",
            "After 2008, sales declined to 22 by 2015.",
            "The lowest value was 12 in 2000.",
        ],
        "models": {
            "llm-direct": (
                [
                    "The chart shows bakery sales between 2000 and 2015.",
                    "Sales grew from 12 in 2000 to a maximum of 45 in 2008.",
                    "From 2008 onwards sales kept increasing.",
                    "Sales ended the period at 22 in 2015.",
                ],
                [(1, "NumericalValueError", "the 2008 peak is 40"),
                 (2, "TrendDirectionError", "sales fell after 2008")],
            ),
            "template": (
                [
                    "This is a line chart titled Annual Bakery Sales, 2000-2015.",
                    "The maximum value of Sales is 40 in 2008.",
                    "The data is sourced from a file named sales.csv.",
                ],
                [(2, "JunkDescription", "file name is not chart content"),
                 (1, "DetailOmission", "no trend is described")],
            ),
        },
    },
    {
        "id": "energy-mix",
        "complexity": "simple",
        "title": "Share of Electricity from Coal and Solar, 1990-2020",
        "y": ("share", "Share of generation"),
        "years": (1990, 2020),
        "series": {
            "Coal": [(1990, 40), (2005, 52), (2020, 20)],
            "Solar": [(1990, 0), (2010, 2), (2020, 26)],
        },
        "gold": [
            "The line chart shows the share of electricity generated from coal and solar between 1990 and 2020.",
            "Coal rose from 40 in 1990 to a peak of 52 in 2005.",
            "Coal then fell steadily to 20 in 2020.",
            "Solar stayed near zero until 2010 and then climbed to 26 by 2020.",
            "Solar overtook Coal between 2018 and 2019.",
        ],
        "models": {
            "llm-direct": (
                [
                    "The chart compares coal and solar shares of electricity from 1990 to 2020.",
                    "Coal peaked at 52 in 2005.",
                    "Solar grew rapidly throughout the whole period.",
                    "Both sources moved in the same direction after 2005.",
                    "Solar passed Coal in 2012.",
                ],
                [(2, "StabilityError", "solar was nearly flat until 2010"),
                 (3, "MultidimensionalTrendError", "coal fell while solar rose"),
                 (4, "RangeError", "the crossing is between 2018 and 2019")],
            ),
            "template": (
                [
                    "This line chart has 2 series: Coal and Solar.",
                    "The maximum of Coal is 52.",
                    "The minimum of Solar is 0.",
                    "Solar accounts for about half of all electricity in 2020.",
                ],
                [(3, "ProportionPerceptionError", "solar is 26 against coal's 20"),
                 (0, "DetailOmission", "no trend or crossing is described")],
            ),
        },
    },
    {
        "id": "museum-visitors",
        "complexity": "moderate",
        "title": "Museum Visitors, 2000-2020",
        "y": ("visitors", "Visitors (thousands)"),
        "years": (2000, 2020),
        "series": {"Visitors": [(2000, 20), (2003, 50), (2006, 30), (2010, 65), (2013, 35), (2017, 80), (2020, 10)]},
        "gold": [
            "The line chart shows yearly museum visitors in thousands from 2000 to 2020.",
            "Visitors rose to 50 in 2003, dipped to 30 in 2006 and climbed to 65 in 2010.",
            "After falling to 35 in 2013, attendance reached its maximum of 80 in 2017.",
            "Visitors then dropped sharply to 10 in 2020, the lowest value on the chart.",
        ],
        "models": {
            "llm-direct": (
                [
                    "The chart tracks museum visitors over two decades.",
                    "Attendance peaked at 65 in 2010.",
                    "Visitors rose and fell in a regular three-year cycle.",
                    "The series ended at 10 in 2020.",
                ],
                [(1, "ExtremumError", "the maximum is 80 in 2017"),
                 (2, "CyclicalityError", "the swings are irregular")],
            ),
            "template": (
                [
                    "The chart is titled Museum Visitors.",
                    "The average number of visitors is 70.",
                    "Visitors fluctuate.",
                    "Consult the museum website for opening hours.",
                ],
                [(1, "NumericalValueError", "the mean is far below 70"),
                 (2, "DetailOmission", "peaks and the final drop are missing"),
                 (3, "JunkDescription", "unrelated to the chart")],
            ),
        },
    },
    {
        "id": "regional-rainfall",
        "complexity": "moderate",
        "title": "Annual Rainfall in the North and South, 1980-2019",
        "y": ("rainfall", "Rainfall (mm)"),
        "years": (1980, 2019),
        "series": {
            "North": [(1980, 600), (1985, 900), (1990, 650), (1995, 950), (2000, 700), (2005, 1000),
                      (2010, 720), (2015, 980), (2019, 800)],
            "South": [(1980, 400), (1992, 680), (2002, 450), (2012, 760), (2019, 500)],
        },
        "gold": [
            "The line chart shows annual rainfall in millimetres for the North and South regions from 1980 to 2019.",
            "North rainfall swung between peaks of 900, 950, 1000 and 980 and troughs of 650 to 720.",
            "Its highest value was 1000 in 2005.",
            "South rainfall peaked at 680 in 1992 and 760 in 2012.",
            "North stayed above South throughout the period.",
        ],
        "models": {
            "llm-direct": (
                [
                    "The chart compares rainfall in two regions.",
                    "North reached its highest level of 1000 in 2005.",
                    "South rainfall was flat over the whole period.",
                    "South overtook North in 2012.",
                    "North rainfall trended downward from 1980 to 2019.",
                ],
                [(2, "StabilityError", "south has two clear peaks"),
                 (3, "MultidimensionalTrendError", "north stays above south"),
                 (4, "TrendDirectionError", "north ends higher than it starts")],
            ),
            "template": (
                [
                    "This chart has two lines.",
                    "The highest value of South is 1000.",
                    "North accounts for 90 percent of the total rainfall.",
                ],
                [(1, "ExtremumError", "1000 is the maximum of North"),
                 (2, "ProportionPerceptionError", "north is roughly 60 percent")],
            ),
        },
    },
    {
        "id": "commodity-price",
        "complexity": "complex",
        "title": "Commodity Price, 2000-2024",
        "y": ("price", "Price (dollars per unit)"),
        "years": (2000, 2024),
        "series": {"Price": [(2000, 30), (2002, 60), (2004, 35), (2007, 90), (2009, 40), (2011, 75), (2013, 45),
                             (2016, 70), (2018, 50), (2021, 95), (2024, 60)]},
        "gold": [
            "The line chart shows the commodity price in dollars per unit from 2000 to 2024.",
            "The price peaked five times, in 2002, 2007, 2011, 2016 and 2021.",
            "The highest price was 95 in 2021 and the lowest was 30 in 2000.",
            "Sharp falls followed the 2007 and 2021 peaks.",
            "The price ended the period at 60 in 2024.",
        ],
        "models": {
            "llm-direct": (
                [
                    "The chart shows commodity prices since 2000.",
                    "Prices rose steadily with occasional dips.",
                    "The highest price was 90 in 2007.",
                    "Prices moved in a regular cycle every four years.",
                    "The price ended at 60 in 2024.",
                ],
                [(1, "DetailOmission", "five peaks reduced to a rise"),
                 (2, "ExtremumError", "the maximum is 95 in 2021"),
                 (3, "CyclicalityError", "peak spacing varies from 4 to 5 years")],
            ),
            "template": (
                [
                    "Commodity Price is shown on the y axis.",
                    "The maximum value is 95.",
                    "The minimum value is 35.",
                    "Generated with chart version 2.",
                ],
                [(2, "NumericalValueError", "the minimum is 30"),
                 (3, "JunkDescription", "tool metadata")],
            ),
        },
    },
    {
        "id": "web-traffic",
        "complexity": "complex",
        "title": "Website Visits by Device, 2000-2023",
        "y": ("visits", "Visits (thousands)"),
        "years": (2000, 2023),
        "series": {
            "Desktop": [(2000, 50), (2002, 70), (2004, 55), (2006, 75), (2008, 58), (2010, 72), (2012, 52),
                        (2014, 66), (2016, 45), (2018, 60), (2020, 38), (2022, 50), (2023, 40)],
            "Mobile": [(2000, 5), (2012, 30), (2014, 28), (2023, 80)],
        },
        "gold": [
            "The line chart shows website visits in thousands from desktop and mobile devices between 2000 and 2023.",
            "Desktop traffic oscillated with six peaks, the highest at 75 in 2006.",
            "Desktop traffic drifted down after 2010 and reached 38 in 2020.",
            "Mobile traffic grew from 5 in 2000 to 80 in 2023.",
            "Mobile overtook Desktop between 2018 and 2019.",
        ],
        "models": {
            "llm-direct": (
                [
                    "The chart shows desktop and mobile visits.",
                    "Desktop traffic was stable at around 60.",
                    "Mobile traffic declined after 2014.",
                    "Mobile passed Desktop in 2010.",
                    "Mobile made up nine tenths of visits in 2023.",
                ],
                [(1, "StabilityError", "desktop swings between 38 and 75"),
                 (2, "TrendDirectionError", "mobile rose after 2014"),
                 (3, "RangeError", "the crossing is between 2018 and 2019"),
                 (4, "ProportionPerceptionError", "mobile is two thirds of visits")],
            ),
            "template": (
                [
                    "This is a line chart with two series.",
                    "The maximum value of Desktop is 75.",
                    "Mobile has a minimum of 5.",
                ],
                [(2, "DetailOmission", "the crossing is not mentioned")],
            ),
        },
    },
]


def annotate(tool, entry_dir, text, source, chart_id, model, out):
    with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as f:
        f.write(text)
        path = f.name
    cmd = [tool, "annotate", "--spec", str(entry_dir / "spec.json"), "--data", str(entry_dir / "data.csv"),
           "--text-file", path, "--source", source, "--chart-id", chart_id, "--out", str(out)]
    if model:
        cmd += ["--model", model]
    subprocess.run(cmd, check=True)
    Path(path).unlink()


def main():
    tool = sys.argv[1]
    if ROOT.exists():
        shutil.rmtree(ROOT)
    for e in ENTRIES:
        d = ROOT / e["id"]
        (d / "generated").mkdir(parents=True)
        years = list(range(e["years"][0], e["years"][1] + 1))
        names = list(e["series"])
        cols = {n: interpolate(a, years) for n, a in e["series"].items()}
        with open(d / "data.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["year"] + names)
            for i, y in enumerate(years):
                w.writerow([y] + [f"{cols[n][i]:g}" for n in names])
        field, title = e["y"]
        enc = {
            "x": {"field": "year", "type": "temporal", "title": "Year"},
            "y": {"field": field, "type": "quantitative", "title": title},
        }
        if len(names) > 1:
            enc["color"] = {"field": "series", "type": "nominal", "title": "Series"}
        else:
            enc["y"]["field"] = names[0]
            enc["y"]["title"] = names[0]
        (d / "spec.json").write_text(json.dumps({"title": e["title"], "mark": "line", "encoding": enc}, indent=2) + "\n")
        (d / "meta.json").write_text(json.dumps({
            "complexity": e["complexity"],
            "provenance": "synthetic; piecewise linear between anchor years",
        }, indent=2) + "\n")
        annotate(tool, d, " ".join(e["gold"]), "gold", e["id"], None, d / "gold.summary.json")
        for model, (sentences, notes) in e["models"].items():
            annotate(tool, d, " ".join(sentences), "external-model", e["id"], model,
                     d / "generated" / f"{model}.summary.json")
            ann = [{"sentence_index": i, "type": t, "note": n} for i, t, n in sorted(notes)]
            (d / "generated" / f"{model}.annotations.json").write_text(json.dumps(ann, indent=2) + "\n")


if __name__ == "__main__":
    main()
