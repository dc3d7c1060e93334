"""Shared test fixtures: the operating-expenses table, its two trees, and case-study data."""

from __future__ import annotations

import copy

from treeqa.table import parse_grid

FIN_HEADER_ROWS = [
    ["", "Year ended December 31,", "", "Per ASM", "Percent"],
    ["", "2019", "2018", "change", "change"],
]
FIN_ROWS = [
    ["Salaries, wages, and benefits", "5.27¢", "4.79¢", "0.48¢", "10.0%"],
    ["Fuel and oil", "2.76", "2.89", "(0.13)", "(4.5)"],
    ["Maintenance materials and repairs", "0.78", "0.69", "0.09", "13.0"],
    ["Landing fees and airport rentals", "0.87", "0.83", "0.04", "4.8"],
    ["Depreciation and amortization", "0.78", "0.75", "0.03", "4.0"],
    ["Other operating expenses", "1.92", "1.79", "0.13", "7.3"],
    ["Total", "12.38¢", "11.74¢", "0.64¢", "5.5%"],
]
FIN_HEADERS = [
    "Category",
    "Year ended December 31, - 2019",
    "Year ended December 31, - 2018",
    "Per ASM - change",
    "Percent - change",
]


def fin_grid():
    return parse_grid(FIN_HEADER_ROWS + FIN_ROWS)


def reference_tree() -> dict:
    """The well-aligned tree: one node per category, qualified attribute keys."""
    body = {}
    for row in FIN_ROWS:
        body[row[0]] = {FIN_HEADERS[c]: row[c] for c in range(1, 5)}
    return {"tree_table": body}


def baseline_tree() -> dict:
    """The layout-driven tree: a header placeholder, positional keys, values promoted to keys."""
    body = {"None": {"2019": "", "2018": "", "change": ""}}
    for row in FIN_ROWS:
        name = row[0]
        if name == "Depreciation and amortization":
            body[name] = {v: "" for v in row[1:]}
        elif name == "Total":
            body[name] = {f"value{i}": v for i, v in enumerate(row[1:], 1)}
        else:
            body[name] = {str(i): v for i, v in enumerate(row[1:])}
    return {"table": body}


# -- case-study trees ---------------------------------------------------------

FIXED_Q1 = {
    "Repair": "2,500",
    "Insurance": "1,200",
    "Depreciation": "3,500",
    "Property Taxes": "900",
    "Utilities": "2,435",
    "Supervisor Salaries": "9,600",
    "Total": "20,135",
    "Less: Depreciation": "(3,500)",
    "Cash Output": "16,635",
}


def overhead_tree() -> dict:
    return {
        "Manufacturing Overhead Budget": {
            "Variable Overhead": {
                "Quarter 1": {
                    "Indirect Materials": "1,800",
                    "Indirect Labor": "3,200",
                    "Utilities": "1,100",
                    "Maintenance": "700",
                    "Total": "6,800",
                }
            },
            "Fixed Expenses": {"Quarter 1": copy.deepcopy(FIXED_Q1)},
        }
    }


def overhead_grid():
    """Row 7 column C holds the cash output figure."""
    rows = [
        ["Fixed Expenses", "Item", "Quarter 1"],
        ["", "Repair", "2,500"],
        ["", "Insurance", "1,200"],
        ["", "Depreciation", "3,500"],
        ["", "Property Taxes", "900"],
        ["", "Utilities", "2,435"],
        ["", "Cash Output", "16,635"],
    ]
    return parse_grid(rows)


EXPENSE_RECORDS = 46
EXPENSE_EMPTY = 26


def expense_tree() -> dict:
    """46 expense records; the Summary field is empty for exactly 26 of them."""
    records = {}
    for i in range(EXPENSE_RECORDS):
        empty = (i * 5) % EXPENSE_RECORDS < EXPENSE_EMPTY
        records[f"Record - {i + 1}"] = {
            "Date": f"2023-{(i % 12) + 1:02d}-{(i % 28) + 1:02d}",
            "Amount": f"{100 + 7 * i:,}.00",
            "Summary": "" if empty else f"Purchase batch {i + 1}",
        }
    return {"Expenses": records}


STD_ERROR_VALUES = [
    "3,355.12",
    "3,220.81",
    "3,901.44",
    "4,012.09",
    "3,598.77",
    "3,477.30",
    "3,802.65",
    "3,690.18",
    "3,755.02",
    "3,633.41",
    "3,911.26",
    "3,549.88",
    "3,702.93",
]
STD_ERROR_SUM = 51596.307
STD_ERROR_MEAN = 3685.4505


def std_error_tree() -> dict:
    """Months 1-4 are null; the 14 remaining values sum to the published total."""
    from decimal import Decimal

    head = sum(Decimal(v.replace(",", "")) for v in STD_ERROR_VALUES)
    last = Decimal("51596.307") - head
    values = STD_ERROR_VALUES + [f"{last:,}"]
    months = {f"Month {m}": None for m in range(1, 5)}
    months.update({f"Month {m}": v for m, v in zip(range(5, 19), values)})
    return {"Std Error": months}


def uniform_rows(n_rows: int = 48, header_rows: int = 2) -> list[list[str]]:
    """A regular table: two header rows then one record per row."""
    rows = [["Region", "Sales", "Sales", "Cost", "Cost"], ["", "2022", "2023", "2022", "2023"]][:header_rows]
    for r in range(header_rows, n_rows):
        i = r - header_rows + 1
        rows.append([f"Store {i:02d}", str(100 + i), str(110 + i), str(60 + i), str(65 + i)])
    return rows
