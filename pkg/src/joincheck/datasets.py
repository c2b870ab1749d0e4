"""Built-in wide tables used by tests, self-test campaigns and the CLI.

shopping: the order/goods/users walkthrough fixture. Its FD structure
decomposes into an order root plus user, goods and goods-name tables, and
the two hand-written noise targets reproduce the worked provenance states
(new wide rows 8 and 9) exactly.

numeric_mix: exercises the value corners the seeded engine faults need:
a float column whose domain contains 0.0 (sign-of-zero predicates), text
join keys that collide when squeezed through float64, and enough shared
values that no accidental FDs sneak in.
"""

from __future__ import annotations

from .core import WideTable
from .normalize import SchemaBundle, decompose, discover_fds


def shopping_table() -> WideTable:
    goods = {101: ("flower", 10), 102: ("book", 20), 103: ("pen", 20)}
    users = {1: "Sven", 2: "Bob", 3: "Sven"}
    orders = [
        (201, 101, 1),
        (201, 102, 1),
        (202, 101, 1),
        (202, 101, 2),
        (203, 102, 2),
        (203, 103, 2),
        (202, 101, 3),
        (204, 102, 3),
    ]
    rows = []
    for order_id, goods_id, user_id in orders:
        name, price = goods[goods_id]
        rows.append([order_id, goods_id, user_id, name, users[user_id], price])
    return WideTable(
        columns=["orderId", "goodsId", "userId", "goodsName", "userName", "price"],
        coltypes=["int", "int", "int", "text", "text", "int"],
        rows=rows,
    )


def numeric_mix_table() -> WideTable:
    # tkey -> (fval, tdep); the two long digit keys are distinct as text but
    # identical once coerced to float64
    tkeys = {
        "alpha": (0.0, "red"),
        "beta": (1.5, "red"),
        "gamma": (0.0, "blue"),
        "delta": (2.5, "green"),
        "12345678901234567": (0.0, "red"),
        "12345678901234568": (4.5, "green"),
    }
    ikeys = {10: "hot", 20: "cold", 30: "hot", 40: "cold", 50: "warm"}
    body = [
        ("alpha", 10),
        ("alpha", 20),
        ("beta", 10),
        ("beta", 20),
        ("gamma", 10),
        ("gamma", 30),
        ("delta", 20),
        ("delta", 30),
        ("alpha", 10),  # repeated pair: tkey+ikey is not a key
        ("beta", 30),
        ("12345678901234567", 40),
        ("12345678901234568", 10),  # sole occurrence: fk-noise eligible
        ("12345678901234567", 20),
        ("gamma", 40),
        ("delta", 10),
        ("beta", 50),  # sole ikey 50 occurrence: fk-noise eligible
    ]
    rows = []
    for rid, (tkey, ikey) in enumerate(body):
        fval, tdep = tkeys[tkey]
        rows.append([rid, tkey, ikey, fval, tdep, ikeys[ikey]])
    return WideTable(
        columns=["rid", "tkey", "ikey", "fval", "tdep", "idep"],
        coltypes=["int", "text", "int", "float", "text", "text"],
        rows=rows,
    )


BUILTINS = {
    "shopping": shopping_table,
    "numeric_mix": numeric_mix_table,
}


def builtin(name: str) -> WideTable:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ValueError(
            f"unknown builtin dataset {name!r}; have {sorted(BUILTINS)}"
        ) from None


def shopping_bundle() -> SchemaBundle:
    t = shopping_table()
    return decompose(t, discover_fds(t))


def numeric_mix_bundle() -> SchemaBundle:
    t = numeric_mix_table()
    return decompose(t, discover_fds(t))


def fixture_noise_plan(bundle: SchemaBundle):
    """The two walkthrough injections: user-key noise on the user table's
    first row, then goods-key noise on the order row with RowID 6.

    Deliberately bypasses the planner's fk-uniqueness rule (the goods key
    101 occurs four times), exactly like the worked example; golden tests
    only exercise join shapes for which this plan stays consistent.
    """
    from .noise import NoisePlan, NoiseTarget

    user_tb = next(t for t in bundle.schema.tables if "userId" in t.pk)
    order_tb = bundle.schema.tables[0]
    return NoisePlan(
        epsilon=0.0,
        seed=0,
        targets=[
            NoiseTarget(table=user_tb.name, row=0, column="userId", kind="pk", replacement=65535),
            NoiseTarget(table=order_tb.name, row=6, column="goodsId", kind="fk", replacement=65534),
        ],
    )
