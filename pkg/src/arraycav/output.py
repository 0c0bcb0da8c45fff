"""CSV/JSON serialization of reports, spectra and sweep tables.

CSV numbers carry 9 significant digits, independent of locale. JSON keeps
full double precision so reports round-trip exactly; non-finite values are
written as the strings "inf"/"-inf"/"nan".
"""

from __future__ import annotations

import io
import json
import math

from .analytics import RateBreakdown
from .scattering import ResonanceSummary, Spectrum
from .sweeps import SweepTable

SPECTRUM_COLUMNS = ("delta", "re_r", "im_r", "abs_r2", "abs_t2", "balance")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".9g")
    return "0" if s == "-0" else s


def _json_num(x):
    if isinstance(x, bool) or x is None:
        return x
    x = float(x)
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _json_value(x):
    return float(x) if isinstance(x, str) else x


def _csv(header, rows, comment: str | None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def sweep_csv(table: SweepTable, *, comment: bool = True) -> str:
    note = (f"{table.parameter} in units of {table.unit}; rates in units of gamma; "
            "C_cavity/r0/epsilon refer to the configured system") if comment else None
    return _csv(table.header, (r.as_tuple() for r in table.rows), note)


def sweep_json(table: SweepTable) -> str:
    rows = [dict(zip(table.header, (_json_num(v) for v in r.as_tuple()))) for r in table.rows]
    return json.dumps({"parameter": table.parameter, "unit": table.unit, "rows": rows}, indent=2) + "\n"


def spectrum_csv(spectrum: Spectrum, *, comment: bool = True) -> str:
    note = "delta in units of gamma; r, t are field amplitudes" if comment else None
    return _csv(SPECTRUM_COLUMNS, spectrum.rows(), note)


def spectrum_json(spectrum: Spectrum) -> str:
    rows = [dict(zip(SPECTRUM_COLUMNS, (_json_num(v) for v in row))) for row in spectrum.rows()]
    return json.dumps({"rows": rows}, indent=2) + "\n"


def rates_to_json_dict(rates: RateBreakdown) -> dict:
    return {k: _json_num(v) for k, v in rates.to_dict().items()}


def rates_from_json_dict(doc: dict) -> RateBreakdown:
    return RateBreakdown.from_dict({k: _json_value(v) for k, v in doc.items()})


def point_report_json(regime: str, rates: RateBreakdown,
                      numeric: ResonanceSummary | None = None) -> str:
    doc = {"regime": regime, "rates": rates_to_json_dict(rates)}
    if numeric is not None:
        doc["numeric"] = {k: _json_num(v) for k, v in numeric.to_dict().items()}
    return json.dumps(doc, indent=2) + "\n"


def resonance_list(values) -> str:
    return "".join(fmt(v) + "\n" for v in values)
