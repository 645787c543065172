#!/usr/bin/env python3
"""Regenerate the tax-payment fixtures in canonical form.

Run from the repo root: python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from brain.expr import Compare, Const, Var
from brain.goals import Goal, GoalModel, Task, serialize_goal_model
from brain.registry import Provider, serialize_providers
from brain.rules import BehaviorRule, ConstraintRule, DiscoveryRule, serialize_rule, serialize_rules
from brain.simulator import serialize_mocks_fixture

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def goal_model() -> GoalModel:
    tasks = [
        Task("TaxPaymentRequest", "Receive tax payment request", "submitTaxRequest",
             "Citizen", input_vars=(), output_vars=("tax.request",)),
        Task("SendPaymentInfo", "Send payment information", "sendPaymentInfo",
             "Citizen", input_vars=("tax.request",), output_vars=("payment.info",)),
        Task("AuthorizePayment", "Authorize payment", "authorizePayment",
             "FinancialInstitution", input_vars=("payment.info",), output_vars=("payment.authorization",)),
        Task("PerformPayment", "Perform payment", "performPayment",
             "FinancialInstitution", input_vars=("payment.authorization",), output_vars=("payment.receipt",)),
        Task("UpdateCitizenStatus", "Update citizen status", "updateCitizenStatus",
             "PublicAdministration", input_vars=("payment.receipt",), output_vars=("citizen.statusRecord",)),
        Task("SendBill", "Send bill", "sendBill",
             "Citizen", input_vars=("citizen.statusRecord",), output_vars=("bill.document",)),
    ]
    root = Goal(
        "TaxPayment", "Tax payment", ordered=True,
        children=(
            Goal("RequestHandling", "Request handling", ordered=True,
                 task_refs=("TaxPaymentRequest", "SendPaymentInfo")),
            Goal("PaymentExecution", "Payment execution", ordered=True,
                 task_refs=("AuthorizePayment", "PerformPayment")),
            Goal("Closure", "Closure", ordered=True,
                 task_refs=("UpdateCitizenStatus", "SendBill")),
        ),
    )
    return GoalModel(root=root, tasks={t.id: t for t in tasks})


BEHAVIOR_RULES = [
    BehaviorRule("B1", "precedence", "TaxPaymentRequest", "SendPaymentInfo"),
    BehaviorRule("B2", "precedence", "AuthorizePayment", "PerformPayment"),
    BehaviorRule("B3", "precedence", "UpdateCitizenStatus", "SendBill"),
    BehaviorRule("B4", "response", "PerformPayment", "SendBill"),
]

R2 = ConstraintRule(
    "R2", "TaxPaymentRequest", "post",
    Compare("ge", Var("citizen.accountBalance"), Var("tax.amount")),
    "fault",
)

DISCOVERY_RULES = [
    DiscoveryRule("D1", "PerformPayment",
                  Compare("le", Var("fulfillmentHours"), Const(2)),
                  required_family="FinancialInstitution"),
    DiscoveryRule("D2", "AuthorizePayment",
                  Compare("eq", Var("contract.secureAuth"), Const(True)),
                  required_family="FinancialInstitution"),
    DiscoveryRule("D3", "UpdateCitizenStatus",
                  Compare("eq", Var("coverage"), Const("national")),
                  required_family="PublicAdministration"),
]

PROVIDERS = [
    Provider("CIT-FrontDesk", "Citizen", "desk://municipality/front-office",
             {"channel": "desk"}),
    Provider("CIT-WebPortal", "Citizen", "https://portal.example/citizen",
             {"channel": "web"}),
    Provider("FI-FastPay", "FinancialInstitution", "https://fastpay.example/ws",
             {"fulfillmentHours": 1, "contract.secureAuth": True}),
    Provider("FI-MailOrder", "FinancialInstitution", "https://mailorder-bank.example/ws",
             {"fulfillmentHours": 72, "contract.secureAuth": True}),
    Provider("PA-CentralRegistry", "PublicAdministration", "https://registry.example/central",
             {"coverage": "national"}),
    Provider("PA-RegionalOffice", "PublicAdministration", "https://registry.example/region-11",
             {"coverage": "regional"}),
]

# (provider, operation, outputs, latency); the two same-family alternatives are
# behaviorally identical so rebinding does not change trace shape.
MOCKS = [
    ("CIT-FrontDesk", "submitTaxRequest", {"tax.request": "TR-2026-0001"}, 1),
    ("CIT-FrontDesk", "sendPaymentInfo", {"payment.info": "IBAN IT60X054281110100000123456 ref TR-2026-0001"}, 1),
    ("CIT-FrontDesk", "sendBill", {"bill.document": "BILL-TR-2026-0001"}, 1),
    ("CIT-WebPortal", "submitTaxRequest", {"tax.request": "TR-2026-0001"}, 1),
    ("CIT-WebPortal", "sendPaymentInfo", {"payment.info": "IBAN IT60X054281110100000123456 ref TR-2026-0001"}, 1),
    ("CIT-WebPortal", "sendBill", {"bill.document": "BILL-TR-2026-0001"}, 1),
    ("FI-FastPay", "authorizePayment", {"payment.authorization": "AUTH-OK"}, 1),
    ("FI-FastPay", "performPayment", {"payment.receipt": "RCPT-000778"}, 1),
    ("FI-MailOrder", "authorizePayment", {"payment.authorization": "AUTH-OK"}, 1),
    ("FI-MailOrder", "performPayment", {"payment.receipt": "RCPT-000778"}, 1),
    ("PA-CentralRegistry", "updateCitizenStatus", {"citizen.statusRecord": "PAID"}, 2),
    ("PA-RegionalOffice", "updateCitizenStatus", {"citizen.statusRecord": "PAID"}, 2),
]

ENV_SUFFICIENT = {"citizen.accountBalance": 5000, "tax.amount": 1500}
ENV_INSUFFICIENT = {"citizen.accountBalance": 100, "tax.amount": 1500}


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "rules").mkdir(exist_ok=True)
    (FIXTURES / "goals.xml").write_text(serialize_goal_model(goal_model()), encoding="utf-8")
    (FIXTURES / "rules" / "behavior.xml").write_text(serialize_rules(BEHAVIOR_RULES), encoding="utf-8")
    (FIXTURES / "rules" / "r2.xml").write_text(serialize_rule(R2), encoding="utf-8")
    (FIXTURES / "rules" / "discovery.xml").write_text(serialize_rules(DISCOVERY_RULES), encoding="utf-8")
    (FIXTURES / "providers.xml").write_text(serialize_providers(PROVIDERS), encoding="utf-8")
    (FIXTURES / "mocks.xml").write_text(serialize_mocks_fixture(MOCKS), encoding="utf-8")
    (FIXTURES / "env-sufficient.json").write_text(
        json.dumps(ENV_SUFFICIENT, indent=2) + "\n", encoding="utf-8")
    (FIXTURES / "env-insufficient.json").write_text(
        json.dumps(ENV_INSUFFICIENT, indent=2) + "\n", encoding="utf-8")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
