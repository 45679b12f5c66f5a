"""Shared store for the per-criterion pass/fail lines (read by conftest's summary hook)."""
LINES: dict = {}


def report(cid: int, ok: bool, detail: str):
    LINES[cid] = (bool(ok), detail)
    print(f"criterion {cid:2d}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
