"""Per-run records and the fixed CSV column order."""

from __future__ import annotations

from dataclasses import asdict, dataclass

COLUMNS = ("instance", "algorithm", "solver", "epsilon", "h_eff", "h_paper", "seed",
           "attempts", "value", "opt", "ratio", "feasible", "frac_before", "frac_after",
           "wall_ms", "error")


@dataclass
class RunReport:
    instance: str = ""
    algorithm: str = ""
    solver: str = ""
    epsilon: float | None = None
    h_eff: int | None = None
    h_paper: int | None = None
    seed: int | None = None
    attempts: int | None = None
    value: float | None = None
    opt: float | None = None
    ratio: float | None = None
    feasible: bool | None = None
    frac_before: int | None = None
    frac_after: int | None = None
    wall_ms: float | None = None
    error: str = ""
    members: tuple = ()
    best_guess: tuple = ()
    from_bare_guess: bool = False
    guesses: int = 0

    def with_opt(self, opt: float | None) -> "RunReport":
        self.opt = opt
        if opt is not None and self.value is not None:
            self.ratio = 1.0 if opt == 0 else self.value / opt
        return self

    def row(self, timing: bool = True) -> dict:
        data = asdict(self)
        out = {}
        for col in COLUMNS:
            v = data[col]
            if col == "wall_ms" and not timing:
                v = None
            out[col] = format_cell(v)
        return out


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
