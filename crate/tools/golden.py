#!/usr/bin/env python3
"""Independent brute-force reference outputs for the bundled fixture.

Reads crates/core/tests/data/fixture200.txt with a self-contained parser and
writes golden files next to it:

  fixture200.golden.json    canonical corpus records
  fixture200.truth.json     saved-set cardinalities and members for heatwave_search.qry
  fixture200.crtable.csv    CR table (min RPY 1900, min count 10, three bands)
  fixture200.spectrum.csv   five-year-median spectrum of that table
  fixture200.keywords.json  keyword co-occurrence graph (min occurrences 5)

Nothing here shares code with the Rust crates.
"""

import csv
import io
import json
import math
import re
from fractions import Fraction
from itertools import combinations
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"

COUNTRY_ALIASES = {
    "U.S.A": "USA",
    "UNITED STATES": "USA",
    "UNITED STATES OF AMERICA": "USA",
    "CHINA": "PEOPLES R CHINA",
    "PR CHINA": "PEOPLES R CHINA",
    "REPUBLIC OF KOREA": "SOUTH KOREA",
    "KOREA": "SOUTH KOREA",
}


def collapse(s):
    return " ".join(s.split())


def country_of(address):
    address = re.sub(r"\[[^\]]*\]", "", address).strip().rstrip(".").strip()
    if not address:
        return None
    last = collapse(address.split(",")[-1]).upper()
    if not last:
        return None
    if last == "USA" or last.endswith(" USA"):
        return "USA"
    return COUNTRY_ALIASES.get(last, last)


def parse_tagged(text):
    if text.startswith("﻿"):
        text = text[1:]
    lines = text.split("\n")
    assert lines[0].startswith("FN")
    records, current, last = [], [], None
    for line in lines[1:]:
        line = line.rstrip("\r")
        if line.startswith("   "):
            current[-1][1].append(line[3:].strip())
            continue
        if not line.strip():
            continue
        tag = line[:2]
        if tag in ("VR", "EF"):
            continue
        if tag == "ER":
            records.append(current)
            current = []
            continue
        current.append((tag, [line[3:].strip()]))
    return [build(r) for r in records]


def build(fields):
    rec = {
        "record_id": "",
        "pub_year": None,
        "doc_types": set(),
        "title": "",
        "abstract": "",
        "authors": [],
        "countries": set(),
        "keywords_author": set(),
        "keywords_plus": set(),
        "subject_categories": set(),
        "cited_refs": [],
        "doi": None,
    }
    for tag, vals in fields:
        joined = " ".join(vals)
        if tag == "UT":
            rec["record_id"] = joined.strip()
        elif tag == "PY":
            rec["pub_year"] = int(joined)
        elif tag == "DT":
            rec["doc_types"] |= {collapse(x) for x in joined.split(";") if x.strip()}
        elif tag == "WC":
            rec["subject_categories"] |= {collapse(x) for x in joined.split(";") if x.strip()}
        elif tag == "DE":
            rec["keywords_author"] |= {collapse(x).lower() for x in joined.split(";") if x.strip()}
        elif tag == "ID":
            rec["keywords_plus"] |= {collapse(x).lower() for x in joined.split(";") if x.strip()}
        elif tag == "TI":
            rec["title"] = joined
        elif tag == "AB":
            rec["abstract"] = joined
        elif tag == "AU":
            for v in vals:
                rec["authors"] += [x.strip() for x in v.split(";") if x.strip()]
        elif tag == "C1":
            for v in vals:
                v = re.sub(r"\[[^\]]*\]", "", v)
                for addr in v.split(";"):
                    c = country_of(addr)
                    if c:
                        rec["countries"].add(c)
        elif tag == "CR":
            rec["cited_refs"] += [v.rstrip() for v in vals if v.strip()]
        elif tag == "DI":
            rec["doi"] = joined.strip() or None
    return rec


def canonical(rec):
    out = dict(rec)
    for k in ("doc_types", "countries", "keywords_author", "keywords_plus", "subject_categories"):
        out[k] = sorted(out[k])
    return out


# ---------------------------------------------------------------- queries

TOKEN = re.compile(r"[0-9a-z]+(?:-[0-9a-z]+)*")


def toks(s):
    return TOKEN.findall(s.lower())


def segments(rec, field):
    segs = [toks(rec["title"])]
    if field == "topic":
        segs.append(toks(rec["abstract"]))
        segs += [toks(k) for k in rec["keywords_author"]]
        segs += [toks(k) for k in rec["keywords_plus"]]
    return segs


def phrase_hit(rec, field, phrase):
    pat = []
    for w in phrase.split():
        wild = w.endswith("*")
        pat.append((w.rstrip("*").lower(), wild))
    for seg in segments(rec, field):
        for start in range(len(seg) - len(pat) + 1):
            ok = True
            for (p, wild), t in zip(pat, seg[start:]):
                if (wild and not t.startswith(p)) or (not wild and t != p):
                    ok = False
                    break
            if ok:
                return True
    return False


def any_hit(rec, field, phrases):
    return any(phrase_hit(rec, field, p) for p in phrases)


def facet(s):
    return collapse(re.sub(r"[^0-9A-Za-z]", " ", s)).upper()


EXCLUDED = {
    "NANOSCIENCE NANOTECHNOLOGY", "ASTRONOMY ASTROPHYSICS", "NUCLEAR SCIENCE TECHNOLOGY",
    "PHYSICS APPLIED", "PHYSICS ATOMIC MOLECULAR CHEMICAL", "PHYSICS CONDENSED MATTER",
    "PHYSICS FLUIDS PLASMAS", "PHYSICS MATHEMATICAL", "PHYSICS MULTIDISCIPLINARY",
    "LITERARY REVIEWS", "MECHANICS",
}
DOCS = {
    "ARTICLE", "MEETING ABSTRACT", "CORRECTION", "PROCEEDINGS PAPER", "LETTER", "REVIEW",
    "NEWS ITEM", "BOOK CHAPTER", "EARLY ACCESS", "EDITORIAL MATERIAL", "BOOK REVIEW",
}
OLD_YEARS = {
    1984, 1967, 1983, 1966, 1982, 1965, 1999, 1981, 1964, 1998, 1980, 1963, 1997, 1979,
    1962, 1996, 1978, 1961, 1995, 1977, 1959, 1994, 1976, 1954, 1993, 1975, 1949, 1992,
    1974, 1940, 1991, 1973, 1938, 1990, 1972, 1930, 1989, 1971, 1926, 1988, 1970, 1914,
    1987, 1969, 1912, 1986, 1968, 1906, 1985,
}


def query_truth(recs):
    ids = lambda pred: {r["record_id"] for r in recs if pred(r)}
    by_id = {r["record_id"]: r for r in recs}
    s = {}
    s[1] = ids(lambda r: any_hit(r, "topic", ["heat wave", "heat waves", "heatwave", "heatwaves", "hot spell", "hot spells"]))

    def fully_excluded(r):
        cats = {facet(c) for c in r["subject_categories"]}
        return bool(cats) and cats <= EXCLUDED

    s[2] = {i for i in s[1] if not fully_excluded(by_id[i])}
    s[3] = s[1] - s[2]
    s[4] = {i for i in s[3] if any_hit(by_id[i], "topic", ["climat*", "greenhouse", "warming", "atmospher*", "tropospher*", "weather"])}
    s[5] = s[2] | s[4]
    doc_ok = lambda i: bool({facet(d) for d in by_id[i]["doc_types"]} & DOCS)
    s[6] = {i for i in s[5] if doc_ok(i)}
    s[7] = ids(lambda r: any_hit(r, "topic", ["climate chang*", "climatic chang*", "climate varia*", "climatic varia*", "climate warm*", "climatic warm*"]))
    s[8] = ids(lambda r: any_hit(r, "topic", ["global temperature*", "global warm*", "greenhouse effect", "greenhouse gas*", "greenhouse warm*"]))
    s[9] = ids(lambda r: any_hit(r, "title", ["climat*", "palaeoclimat*", "paleoclimat*"]))
    s[10] = s[9] | s[8] | s[7]
    s[11] = s[10] & s[6]
    s[12] = {i for i in s[6] if by_id[i]["pub_year"] in OLD_YEARS}
    s[13] = s[6] & ids(lambda r: any_hit(r, "topic", ["mortality"]))
    s[14] = ids(lambda r: any_hit(r, "topic", ["wet bulb temperature*", "wbt"]))
    s[15] = s[14] & s[6]
    return {
        "#%d" % k: {"count": len(v), "members": sorted(v)} for k, v in sorted(s.items())
    }


# ---------------------------------------------------------------- RPYS

def ref_year(raw):
    for seg in raw.split(",")[1:]:
        seg = seg.strip()
        if re.fullmatch(r"\d{4}", seg):
            return int(seg)
    first = raw.split(",")[0].strip()
    if re.fullmatch(r"\d{4}", first):
        return int(first)
    return None


def ref_doi(raw):
    for seg in raw.split(","):
        seg = seg.strip()
        if seg.upper().startswith("DOI "):
            return seg[4:].strip()
    return ""


def cr_table(recs, min_rpy, min_count, bands):
    counts = {}
    for r in recs:
        for raw in set(r["cited_refs"]):
            counts[raw] = counts.get(raw, 0) + 1
    rows = []
    for raw, n in counts.items():
        y = ref_year(raw)
        if y is None or y < min_rpy or n < min_count:
            continue
        rows.append([raw, y, n])
    rows.sort(key=lambda x: (x[1], -x[2], x[0]))
    kept = {row[0] for row in rows}
    by_year = {}
    for r in recs:
        by_year.setdefault(r["pub_year"], []).append(r)
    top10 = {raw: 0 for raw in kept}
    rpy_of = {row[0]: row[1] for row in rows}
    for t, papers in by_year.items():
        slice_counts = {}
        for p in papers:
            for raw in set(p["cited_refs"]):
                if raw in kept:
                    slice_counts[raw] = slice_counts.get(raw, 0) + 1
        per_rpy = {}
        for raw, c in slice_counts.items():
            per_rpy.setdefault(rpy_of[raw], []).append((raw, c))
        for rpy, items in per_rpy.items():
            vals = sorted((c for _, c in items), reverse=True)
            k = math.ceil(len(vals) / 10)
            threshold = vals[k - 1]
            for raw, c in items:
                if c >= threshold:
                    top10[raw] += 1
    out = []
    for raw, y, n in rows:
        sel = any(lo <= y <= hi and n >= m for lo, hi, m in bands)
        out.append((raw, y, n, top10[raw], sel))
    return out


def fmt_half(fr):
    if fr.denominator == 1:
        return str(fr.numerator)
    assert fr.denominator == 2
    whole = abs(fr.numerator) // 2
    sign = "-" if fr < 0 else ""
    return "%s%d.5" % (sign, whole)


def spectrum(rows):
    totals = {}
    for raw, y, n, _, _ in rows:
        totals[y] = totals.get(y, 0) + n
    lo, hi = min(totals), max(totals)
    series = [totals.get(y, 0) for y in range(lo, hi + 1)]
    out = []
    for i, y in enumerate(range(lo, hi + 1)):
        win = sorted(series[max(0, i - 2): i + 3])
        m = len(win)
        med = Fraction(win[m // 2]) if m % 2 else Fraction(win[m // 2 - 1] + win[m // 2], 2)
        out.append((y, series[i], med, series[i] - med))
    return out


# ---------------------------------------------------------------- graphs

def keyword_graph(recs, min_occ):
    occ = {}
    for r in recs:
        for k in r["keywords_plus"]:
            occ[k] = occ.get(k, 0) + 1
    labels = sorted(k for k, n in occ.items() if n >= min_occ)
    idx = {k: i for i, k in enumerate(labels)}
    pairs = {}
    years = {k: [] for k in labels}
    for r in recs:
        ks = sorted(idx[k] for k in r["keywords_plus"] if k in idx)
        for k in ks:
            years[labels[k]].append(r["pub_year"])
        for a, b in combinations(ks, 2):
            pairs[(a, b)] = pairs.get((a, b), 0) + 1
    items = [
        {"id": i + 1, "label": k, "weight": occ[k], "score": sum(years[k]) / len(years[k]), "cluster": None}
        for i, k in enumerate(labels)
    ]
    links = [
        {"source_id": a + 1, "target_id": b + 1, "strength": w}
        for (a, b), w in sorted(pairs.items())
    ]
    return {"items": items, "links": links}


def main():
    text = (DATA / "fixture200.txt").read_text(encoding="utf-8")
    recs = parse_tagged(text)
    assert len(recs) == 200, len(recs)
    (DATA / "fixture200.golden.json").write_text(
        json.dumps([canonical(r) for r in recs], indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (DATA / "fixture200.truth.json").write_text(json.dumps(query_truth(recs), indent=1) + "\n", encoding="utf-8")

    bands = [(1950, 1999, 50), (2000, 2014, 150), (2015, 2020, 100)]
    rows = cr_table(recs, 1900, 10, bands)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["CR", "RPY", "N_CR", "N_TOP10", "SELECTED", "DOI"])
    for raw, y, n, t, sel in rows:
        w.writerow([raw, y, n, t, "true" if sel else "false", ref_doi(raw)])
    (DATA / "fixture200.crtable.csv").write_text(buf.getvalue(), encoding="utf-8")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["RPY", "N_CR_TOTAL", "MEDIAN_5", "DEVIATION"])
    for y, tot, med, dev in spectrum(rows):
        w.writerow([y, tot, fmt_half(med), fmt_half(dev)])
    (DATA / "fixture200.spectrum.csv").write_text(buf.getvalue(), encoding="utf-8")

    (DATA / "fixture200.keywords.json").write_text(
        json.dumps(keyword_graph(recs, 5), indent=1) + "\n", encoding="utf-8"
    )


if __name__ == "__main__":
    main()
