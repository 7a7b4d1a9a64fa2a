"""Published comparison numbers used as rendering fixtures, plus their stars."""

AUTOMATIC_COLUMNS = ["BLEU-4", "ROUGE-L", "METEOR", "ChRF", "BERTScore"]
HUMAN_COLUMNS = ["Gramm", "Appr", "Rel", "Comp", "Answ"]

AUTOMATIC = [
    ("T5-large (Baseline)", [21.59, 53.90, 32.20, 57.03, 71.80]),
    ("BART-large (Baseline)", [20.05, 51.60, 31.90, 54.96, 74.20]),
    ("ICL (k=3)", [22.65, 54.24, 32.98, 58.47, 74.93]),
    ("ICL (k=5)", [22.87, 54.84, 33.58, 59.42, 75.60]),
    ("ICL (k=7)", [22.69, 55.95, 34.62, 60.48, 75.92]),
    ("RAG (k=5)", [20.76, 52.60, 32.07, 56.93, 70.20]),
    ("Hybrid Model (k=5, m=5)", [21.45, 53.79, 33.69, 57.78, 71.45]),
]
AUTOMATIC_STARS = {
    ("ICL (k=5)", "ChRF"),
    ("ICL (k=5)", "BERTScore"),
    ("ICL (k=7)", "ROUGE-L"),
    ("ICL (k=7)", "ChRF"),
    ("ICL (k=7)", "BERTScore"),
}
AUTOMATIC_BEST = {
    "BLEU-4": "ICL (k=5)",
    "ROUGE-L": "ICL (k=7)",
    "METEOR": "ICL (k=7)",
    "ChRF": "ICL (k=7)",
    "BERTScore": "ICL (k=7)",
}

HUMAN = [
    ("T5-large (Baseline)", [4.65, 4.45, 3.92, 3.57, 3.21]),
    ("BART-large (Baseline)", [3.81, 3.98, 3.60, 3.60, 3.15]),
    ("ICL (k=3)", [4.67, 4.50, 3.97, 3.65, 3.20]),
    ("ICL (k=5)", [4.72, 4.56, 4.03, 3.78, 3.24]),
    ("ICL (k=7)", [4.76, 4.62, 4.08, 3.84, 3.31]),
    ("RAG (k=5)", [3.90, 4.10, 3.70, 3.74, 2.90]),
    ("Hybrid Model (k=5, m=5)", [4.84, 4.74, 4.25, 4.02, 3.20]),
]
HUMAN_STARS = {
    (model, col)
    for model in ("ICL (k=3)", "ICL (k=5)", "ICL (k=7)")
    for col in ("Gramm", "Appr", "Rel")
} | {("Hybrid Model (k=5, m=5)", col) for col in ("Gramm", "Appr", "Rel", "Comp")}
HUMAN_BEST = {
    "Gramm": "Hybrid Model (k=5, m=5)",
    "Appr": "Hybrid Model (k=5, m=5)",
    "Rel": "Hybrid Model (k=5, m=5)",
    "Comp": "Hybrid Model (k=5, m=5)",
    "Answ": "ICL (k=7)",
}


def as_results(rows, columns):
    return [(label, dict(zip(columns, values))) for label, values in rows]


def as_significance(stars):
    return {key: True for key in stars}
