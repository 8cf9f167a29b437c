"""Convert the UCI dermatology file to data/dermatology.csv.

Fetch dermatology.data from
https://archive.ics.uci.edu/dataset/33/dermatology
then run:  python3 scripts/convert_dermatology.py dermatology.data data/dermatology.csv

Rows with a missing age ("?") are dropped (8 of 366).
"""
import csv
import sys

NAMES = [
    "erythema", "scaling", "definite borders", "itching", "koebner phenomenon",
    "polygonal papules", "follicular papules", "oral mucosal involvement",
    "knee and elbow involvement", "scalp involvement", "family history",
    "melanin incontinence", "eosinophils in the infiltrate", "PNL infiltrate",
    "fibrosis of the papillary dermis", "exocytosis", "acanthosis",
    "hyperkeratosis", "parakeratosis", "clubbing of the rete ridges",
    "elongation of the rete ridges", "thinning of the suprapapillary epidermis",
    "spongiform pustule", "munro microabcess", "focal hypergranulosis",
    "disappearance of the granular layer", "vacuolisation and damage of basal layer",
    "spongiosis", "saw-tooth appearance of retes", "follicular horn plug",
    "perifollicular parakeratosis", "inflammatory monoluclear inflitrate",
    "band-like infiltrate", "age",
]


def main(src, dst):
    kept = dropped = 0
    with open(src) as fin, open(dst, "w", newline="") as fout:
        out = csv.writer(fout, lineterminator="\n")
        out.writerow(NAMES + ["class"])
        for row in csv.reader(fin):
            if not row:
                continue
            if len(row) != len(NAMES) + 1:
                sys.exit(f"unexpected row with {len(row)} fields")
            if "?" in row:
                dropped += 1
                continue
            out.writerow([cell.strip() for cell in row])
            kept += 1
    print(f"wrote {kept} rows, dropped {dropped}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
