from helpers import VERDICTS


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    groups: dict[str, list[tuple[str, bool, str]]] = {}
    for label, (ok, detail) in VERDICTS.items():
        groups.setdefault(label.split("(")[0], []).append((label, ok, detail))
    for key in sorted(groups, key=int):
        rows = groups[key]
        ok = all(r[1] for r in rows)
        tr.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}")
        for label, passed, detail in rows:
            tr.write_line(f"    {label}: {'PASS' if passed else 'FAIL'}  {detail}")
