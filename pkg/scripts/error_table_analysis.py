"""Dataset analytics (MID, DSJE, correlations) over a clip_id,mds,mpjpe_g error table.

    python3 scripts/error_table_analysis.py tests/data/uhc_reference.csv
"""
import argparse
import csv
import json

from torquescore.analysis import ScoredRecord, correlations, dsje_many, mid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("table")
    ap.add_argument("--dsje", type=float, nargs="+", default=[250.0, 300.0, 350.0])
    args = ap.parse_args()
    with open(args.table, newline="") as fh:
        recs = [ScoredRecord(r["clip_id"], float(r["mds"]), float(r["mpjpe_g"])) for r in csv.DictReader(fh)]
    out = {
        "n": len(recs),
        "mid": mid(recs).as_dict(),
        "dsje": {str(c): v for c, v in dsje_many(recs, args.dsje).items()},
        "correlations": correlations(recs).as_dict(),
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
