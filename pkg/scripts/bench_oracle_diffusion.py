"""Timing experiment: one oracle plus one partial diffusion across register
sizes, the building blocks every query operator is made of.

Run: python scripts/bench_oracle_diffusion.py [max_data_qubits]
"""

import sys
import time

from qqldb.boolcirc import And, Comparison, apply_oracle, truth_table
from qqldb.diffusion import DiffusionParams, apply_partial_diffusion
from qqldb.qdb import create_db
from qqldb.schema import TableSchema


def bench(n: int) -> tuple[float, float, float]:
    schema = TableSchema("bench", (("id", n),))
    db = create_db(schema, t=1)
    db.insert_bulk(n)
    expr = And(Comparison("id", ">=", 1 << (n // 2)), Comparison("id", "<", 3 << (n // 2)))

    t0 = time.perf_counter()
    table = truth_table(expr, schema)
    t1 = time.perf_counter()
    apply_oracle(db.state, table, db.data_qubits, n)
    t2 = time.perf_counter()
    apply_partial_diffusion(db.state, DiffusionParams(n), flag_qubit=n)
    t3 = time.perf_counter()
    return t1 - t0, t2 - t1, t3 - t2


def main():
    max_n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    print(f"{'n':>3}  {'amps':>9}  {'table':>9}  {'oracle':>9}  {'diffusion':>9}  {'total':>9}")
    for n in range(10, max_n + 1, 2):
        table_s, oracle_s, diffusion_s = bench(n)
        total = table_s + oracle_s + diffusion_s
        print(
            f"{n:>3}  {1 << (n + 1):>9}  {table_s:>8.4f}s  {oracle_s:>8.4f}s"
            f"  {diffusion_s:>8.4f}s  {total:>8.4f}s"
        )


if __name__ == "__main__":
    main()
