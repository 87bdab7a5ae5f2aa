#!/usr/bin/env python3
"""Generate the bundled 200-record synthetic export fixture.

Writes, under crates/core/tests/data/:
  fixture200.txt   field-tagged export (records shuffled in field order)
  fixture200.tsv   the same records in the tab-delimited layout
  heatwave_search.qry   the saved-set query script replayed against the fixture

Ground-truth files are produced separately by tools/golden.py, which parses the
written export with its own code and never imports this module.
"""

import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"
RNG = random.Random(20210701)

FILLER = (
    "urban soil moisture drought regional analysis model impacts hospital "
    "elderly risk exposure ozone forest coral marine city index vegetation "
    "stress adaptation response observed projected events summer europe "
    "chicago ensemble extreme daily temperature rainfall health population "
    "vulnerability trends patterns station network study evidence cohort"
).split()

HEAT_FORMS = ["heat wave", "Heat Waves", "heatwave", "HEATWAVES", "hot spell", "Hot spells"]
RESCUE_WORDS = ["climate", "greenhouse", "warming", "atmospheric", "troposphere", "weather", "climatic"]
TS7 = ["climate change", "climatic variability", "climate warming", "Climate changes"]
TS8 = ["global warming", "greenhouse gases", "global temperatures", "greenhouse effect"]
TITLE9 = ["Climate", "palaeoclimate", "paleoclimatic"]
WBT = ["wet bulb temperature", "WBT", "wet bulb temperatures"]

NORMAL_CATS = [
    "Meteorology & Atmospheric Sciences",
    "Environmental Sciences",
    "Public, Environmental & Occupational Health",
    "Ecology",
    "Water Resources",
    "Geosciences, Multidisciplinary",
    "Plant Sciences",
    "Marine & Freshwater Biology",
]
EXCLUDED_CATS = [
    "Physics, Applied",
    "Nanoscience & Nanotechnology",
    "Mechanics",
    "Astronomy & Astrophysics",
    "Physics, Condensed Matter",
    "Physics, Fluids & Plasmas",
]

DOC_TYPES = [
    (["Article"], 60),
    (["Review"], 8),
    (["Proceedings Paper"], 6),
    (["Article", "Early Access"], 4),
    (["Letter"], 4),
    (["Editorial Material"], 3),
    (["Meeting Abstract"], 3),
    (["Retracted Publication"], 3),
    (["Data Paper"], 3),
]

KEYWORDS_PLUS = [
    "MORTALITY", "TEMPERATURE", "CLIMATE-CHANGE", "HEAT-WAVE", "URBAN HEAT-ISLAND",
    "DROUGHT", "VARIABILITY", "IMPACTS", "HEALTH", "PRECIPITATION", "SOIL-MOISTURE",
    "EXTREMES", "2003 HEAT-WAVE", "VULNERABILITY", "AIR-POLLUTION", "OZONE", "EUROPE",
    "UNITED-STATES", "ADAPTATION", "RISK", "SIMULATIONS", "TRENDS", "EVENTS", "SUMMER",
    "MARINE HEATWAVES", "CORAL-REEFS", "HOSPITAL ADMISSIONS", "RESPONSES",
]
AUTHOR_KEYWORDS = [
    "Urban heat island", "Drought", "Excess   mortality", "Adaptation", "Soil moisture",
    "Epidemiology", "Thermal comfort", "Ensemble", "Reanalysis", "Vulnerability",
]

COUNTRY_ADDRESSES = {
    "USA": "Natl Ctr Atmospher Res, Boulder, CO 80307 USA",
    "AUSTRALIA": "Univ Melbourne, Sch Geog, Melbourne, Vic 3010, Australia",
    "PEOPLES R CHINA": "Chinese Acad Sci, Inst Atmospher Phys, Beijing 100029, Peoples R China",
    "ENGLAND": "Univ Oxford, Dept Phys, Oxford OX1 3PU, England",
    "GERMANY": "Potsdam Inst Climate Impact Res, D-14412 Potsdam, Germany",
    "FRANCE": "Inst Veille Sanit, F-94415 St Maurice, France",
    "ITALY": "Univ Florence, Dept Stat, I-50134 Florence, Italy",
    "SPAIN": "Univ Complutense Madrid, Dept Fis Tierra 2, E-28040 Madrid, Spain",
    "SWITZERLAND": "ETH, Inst Atmospher & Climate Sci, CH-8092 Zurich, Switzerland",
    "CANADA": "Univ Toronto, Dept Geog, Toronto, ON M5S 3G3, Canada",
    "SCOTLAND": "Univ Edinburgh, Sch GeoSci, Edinburgh EH9 3JW, Midlothian, Scotland",
    "ARMENIA": "Natl Acad Sci, Yerevan 0019, Armenia",
}
MANY_COUNTRIES = [
    "Austria", "Belgium", "Brazil", "Chile", "Denmark", "Finland", "Greece", "Hungary",
    "India", "Ireland", "Israel", "Japan", "Kenya", "Mexico", "Netherlands", "Norway",
    "Poland", "Portugal", "Russia", "Singapore", "South Africa", "Sweden", "Taiwan",
    "Thailand", "Turkey", "Uruguay", "Vietnam", "New Zealand", "Argentina", "Egypt",
]

# Canonical cited references (RPY range deliberately spans pre-1900 years).
CANON_REFS = [
    "MEEHL GA, 2004, SCIENCE, V305, P994, DOI 10.1126/science.1098704",
    "SCHAER C, 2004, NATURE, V427, P332, DOI 10.1038/nature02300",
    "MANN HB, 1945, ECONOMETRICA, V13, P245",
    "SEN PK, 1968, J AM STAT ASSOC, V63, P1379",
    "SEMENZA JC, 1996, NEW ENGL J MED, V335, P84, DOI 10.1056/NEJM199607113350203",
    "KALNAY E, 1996, B AM METEOROL SOC, V77, P437",
    "STOTT PA, 2004, NATURE, V432, P610, DOI 10.1038/nature03089",
    "ROBINSON PJ, 2001, J APPL METEOROL, V40, P762",
    "EASTERLING DR, 2000, SCIENCE, V289, P2068, DOI 10.1126/science.289.5487.2068",
    "BASU R, 2002, EPIDEMIOL REV, V24, P190, DOI 10.1093/epirev/mxf007",
    "CURRIERO FC, 2002, AM J EPIDEMIOL, V155, P80, DOI 10.1093/aje/155.1.80",
    "FISCHER EM, 2007, J CLIMATE, V20, P5081, DOI 10.1175/JCLI4288.1",
    "ROBINE JM, 2008, CR BIOL, V331, P171, DOI 10.1016/j.crvl.2007.12.001",
    "DEE DP, 2011, Q J ROY METEOR SOC, V137, P553, DOI 10.1002/qj.828",
    "BARRIOPEDRO D, 2011, SCIENCE, V332, P220, DOI 10.1126/science.1201224",
    "PERKINS SE, 2013, J CLIMATE, V26, P4500, DOI 10.1175/JCLI-D-12-00383.1",
    "HOBDAY AJ, 2016, PROG OCEANOGR, V141, P227, DOI 10.1016/j.pocean.2015.12.014",
    "OKE TR, 1982, Q J ROY METEOR SOC, V108, P1, DOI 10.1002/qj.49710845502",
    "STEADMAN RG, 1979, J APPL METEOROL, V18, P861",
    "OKE TR, 1973, ATMOS ENVIRON, V7, P769",
    "KATZ RW, 1992, CLIMATIC CHANGE, V21, P289",
    "WHITMAN S, 1997, AM J PUBLIC HEALTH, V87, P1515",
    "CIAIS P, 2005, NATURE, V437, P529, DOI 10.1038/nature03972",
    "FOUILLET A, 2006, INT ARCH OCC ENV HEA, V80, P16",
    "GASPARRINI A, 2015, LANCET, V386, P369",
    "OLIVER ECJ, 2018, NAT COMMUN, V9, P1324",
    "HUMBOLDT A, 1817, MEM PHYS CHIM SOC ARC, V3, P462",
    "HOWARD L, 1833, CLIMATE LONDON",
    "IPCC, 2013, CLIMATE CHANGE 2013 PHYSICAL SCIENCE BASIS",
    "ANONYMOUS, HEAT HLTH ACTION PLANS",
    "MORA C, 2017, NAT CLIM CHANGE, V7, P501",
    "RUSSO S, 2014, J GEOPHYS RES-ATMOS, V119, P12500",
]
# Misspelled variants that cite the same work as a canonical entry.
VARIANTS = {
    "SCHAER C, 2004, NATURE, V427, P332, DOI 10.1038/nature02300": [
        "SCHAR C, 2004, NATURE, V427, P332",
        "SCHAER C, 2004, NATURE, V427, P332",
    ],
    "MEEHL GA, 2004, SCIENCE, V305, P994, DOI 10.1126/science.1098704": [
        "MEEHL GA, 2004, SCIENCE, V305, P994",
    ],
    "SEMENZA JC, 1996, NEW ENGL J MED, V335, P84, DOI 10.1056/NEJM199607113350203": [
        "SEMENZA JC, 1996, NEW ENGL J MED, V335, P84",
    ],
}


def words(k):
    return [RNG.choice(FILLER) for _ in range(k)]


def sentence(parts, k=10):
    base = words(k)
    for p in parts:
        base.insert(RNG.randrange(len(base) + 1), p)
    return " ".join(base)


def zipf_refs(k):
    out = []
    weights = [1.0 / (i + 1) ** 0.6 for i in range(len(CANON_REFS))]
    while len(out) < k:
        ref = RNG.choices(CANON_REFS, weights)[0]
        if ref in VARIANTS and RNG.random() < 0.35:
            ref = RNG.choice(VARIANTS[ref])
        if ref not in out:
            out.append(ref)
    return out


def make_record(i):
    year = RNG.choice(list(range(1964, 1990)) + list(range(1990, 2021)) * 4)
    title_parts, abstract_parts = [], []
    de, idk = set(), set()

    def plant(term):
        where = RNG.choice(["title", "abstract", "de", "id"])
        if where == "title":
            title_parts.append(term)
        elif where == "abstract":
            abstract_parts.append(term)
        elif where == "de":
            de.add(term)
        else:
            idk.add(term.upper())

    if RNG.random() < 0.75:
        plant(RNG.choice(HEAT_FORMS))
    if RNG.random() < 0.25:
        plant(RNG.choice(RESCUE_WORDS))
    if RNG.random() < 0.25:
        plant(RNG.choice(TS7))
    if RNG.random() < 0.12:
        plant(RNG.choice(TS8))
    if RNG.random() < 0.10:
        title_parts.append(RNG.choice(TITLE9))
    if RNG.random() < 0.30:
        plant("mortality")
    if RNG.random() < 0.06:
        plant(RNG.choice(WBT))

    for kw in RNG.sample(KEYWORDS_PLUS, RNG.randint(0, 6)):
        idk.add(kw)
    for kw in RNG.sample(AUTHOR_KEYWORDS, RNG.randint(0, 3)):
        de.add(kw)

    roll = RNG.random()
    if roll < 0.78:
        cats = RNG.sample(NORMAL_CATS, RNG.randint(1, 2))
    elif roll < 0.90:
        cats = RNG.sample(EXCLUDED_CATS, RNG.randint(1, 2))
    else:
        cats = [RNG.choice(EXCLUDED_CATS), RNG.choice(NORMAL_CATS)]

    doc_types = RNG.choices([d for d, _ in DOC_TYPES], [w for _, w in DOC_TYPES])[0]

    countries = RNG.sample(list(COUNTRY_ADDRESSES), RNG.choice([1, 1, 1, 2, 2, 3]))
    addresses = []
    authors = []
    for c in countries:
        a1 = "%s, %s" % (RNG.choice(["Smith", "Meehl", "Schaer", "Li", "Rossi", "Garcia", "Muller"]),
                         RNG.choice(["J", "GA", "C", "K", "M"]))
        authors.append(a1)
        addresses.append("[%s] %s." % (a1, COUNTRY_ADDRESSES[c]))

    refs = zipf_refs(RNG.randint(5, 18))
    doi = "10.5555/syn.%04d" % i if RNG.random() < 0.8 else None

    return {
        "UT": "SYN:%06d" % i,
        "PY": str(year),
        "DT": "; ".join(doc_types),
        "TI": sentence(title_parts, RNG.randint(4, 8)),
        "AB": sentence(abstract_parts, RNG.randint(15, 30)) if RNG.random() < 0.9 else None,
        "AU": authors,
        "C1": addresses,
        "DE": "; ".join(sorted(de)) if de else None,
        "ID": "; ".join(sorted(idk)) if idk else None,
        "WC": "; ".join(cats),
        "CR": refs,
        "DI": doi,
    }


def many_country_record(i):
    rec = make_record(i)
    names = MANY_COUNTRIES[:30]
    rec["AU"] = ["Author%02d, X" % k for k in range(len(names))]
    rec["C1"] = ["[Author%02d, X] Inst %d, Capital, %s." % (k, k, n) for k, n in enumerate(names)]
    return rec


def wrap(value, width=60):
    out, line = [], ""
    for w in value.split(" "):
        if line and len(line) + 1 + len(w) > width:
            out.append(line)
            line = w
        else:
            line = (line + " " + w) if line else w
    out.append(line)
    return out


def tagged(records):
    lines = ["﻿FN Synthetic Bibliographic Export", "VR 1.0"]
    for rec in records:
        fields = []
        fields.append(["PT J"])
        for tag in ["UT", "PY", "DT", "DI"]:
            if rec[tag] is not None:
                fields.append(["%s %s" % (tag, rec[tag])])
        for tag in ["TI", "AB", "DE", "ID", "WC"]:
            if rec[tag] is not None:
                wrapped = wrap(rec[tag])
                fields.append(["%s %s" % (tag, wrapped[0])] + ["   " + w for w in wrapped[1:]])
        for tag in ["AU", "C1", "CR"]:
            vals = rec[tag]
            if vals:
                fields.append(["%s %s" % (tag, vals[0])] + ["   " + v for v in vals[1:]])
        RNG.shuffle(fields)
        for f in fields:
            lines.extend(f)
        lines.append("ER")
        lines.append("")
    lines.append("EF")
    return "\n".join(lines) + "\n"


def tsv(records):
    tags = ["PT", "AU", "TI", "AB", "DE", "ID", "WC", "C1", "CR", "PY", "DT", "DI", "UT"]
    rows = ["\t".join(tags)]
    for rec in records:
        cells = []
        for t in tags:
            if t == "PT":
                cells.append("J")
                continue
            v = rec.get(t)
            if v is None:
                cells.append("")
            elif isinstance(v, list):
                cells.append("; ".join(v))
            else:
                cells.append(v)
        rows.append("\t".join(cells))
    return "\n".join(rows) + "\n"


QUERY_SCRIPT = """\
-- Saved-set script replayed against the synthetic fixture.
#1 := TS=("heat wave" OR "heat waves" OR heatwave OR heatwaves OR "hot spell" OR "hot spells")
#2 := #1 REFINED BY EXCLUDING WC=(NANOSCIENCE NANOTECHNOLOGY OR ASTRONOMY ASTROPHYSICS OR NUCLEAR SCIENCE TECHNOLOGY OR PHYSICS APPLIED OR PHYSICS ATOMIC MOLECULAR CHEMICAL OR PHYSICS CONDENSED MATTER OR PHYSICS FLUIDS PLASMAS OR PHYSICS MATHEMATICAL OR PHYSICS MULTIDISCIPLINARY OR LITERARY REVIEWS OR MECHANICS)
#3 := #1 NOT #2
#4 := #3 AND TS=(climat* OR greenhouse OR warming OR atmospher* OR tropospher* OR weather)
#5 := #2 OR #4
#6 := (#2 OR #4) REFINED BY DT=(ARTICLE OR MEETING ABSTRACT OR CORRECTION OR PROCEEDINGS PAPER OR LETTER OR REVIEW OR NEWS ITEM OR BOOK CHAPTER OR EARLY ACCESS OR EDITORIAL MATERIAL OR BOOK REVIEW)
#7 := TOPIC: ("climate chang*" OR "climatic chang*" OR "climate varia*" OR "climatic varia*" OR "climate warm*" OR "climatic warm*")
#8 := TOPIC: ("global temperature*" OR "global warm*" OR "greenhouse effect" OR "greenhouse gas*" OR "greenhouse warm*")
#9 := TITLE: (climat* OR palaeoclimat* OR paleoclimat*)
#10 := #9 OR #8 OR #7
#11 := #10 AND #6
#12 := (#2 OR #4) REFINED BY DT=(ARTICLE OR MEETING ABSTRACT OR CORRECTION OR PROCEEDINGS PAPER OR LETTER OR REVIEW OR NEWS ITEM OR BOOK CHAPTER OR EARLY ACCESS OR EDITORIAL MATERIAL OR BOOK REVIEW) AND PY=(1984 OR 1967 OR 1983 OR 1966 OR 1982 OR 1965 OR 1999 OR 1981 OR 1964 OR 1998 OR 1980 OR 1963 OR 1997 OR 1979 OR 1962 OR 1996 OR 1978 OR 1961 OR 1995 OR 1977 OR 1959 OR 1994 OR 1976 OR 1954 OR 1993 OR 1975 OR 1949 OR 1992 OR 1974 OR 1940 OR 1991 OR 1973 OR 1938 OR 1990 OR 1972 OR 1930 OR 1989 OR 1971 OR 1926 OR 1988 OR 1970 OR 1914 OR 1987 OR 1969 OR 1912 OR 1986 OR 1968 OR 1906 OR 1985)
#13 := #6 AND TS=mortality
#14 := TOPIC: ("wet bulb temperature*" OR WBT)
#15 := #14 AND #6
"""


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    records = [make_record(i) for i in range(1, 200)]
    records.insert(RNG.randrange(len(records)), many_country_record(200))
    (OUT / "fixture200.txt").write_text(tagged(records), encoding="utf-8")
    (OUT / "fixture200.tsv").write_text(tsv(records), encoding="utf-8")
    (OUT / "heatwave_search.qry").write_text(QUERY_SCRIPT, encoding="utf-8")


if __name__ == "__main__":
    main()
