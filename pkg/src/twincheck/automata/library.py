"""Small reference networks used in tests and demos."""

from __future__ import annotations

from .network import Network, NetworkBuilder


def lamp_network(slow_user: bool = False) -> Network:
    """The lamp-and-user network.

    Pressing once turns the lamp on (low), a second press within 5 time
    units makes it bright, a later second press turns it off.  The user may
    press at any time or never.  With ``slow_user`` every press is guarded
    by ``y >= 5``, so the lamp can never become bright.
    """
    nb = NetworkBuilder()
    nb.clock("y").channel("press")
    lamp = nb.template("Lamp")
    lamp.location("off").location("low").location("bright")
    lamp.edge("off", "low", sync="press?", update="y = 0")
    lamp.edge("low", "off", guard="y >= 5", sync="press?")
    lamp.edge("low", "bright", guard="y < 5", sync="press?")
    lamp.edge("bright", "off", sync="press?")
    user = nb.template("User")
    user.location("idle")
    user.edge("idle", "idle", guard="y >= 5" if slow_user else "", sync="press!")
    return nb.build()


def random_network(rng, max_templates: int = 3, max_locations: int = 4,
                   max_const: int = 5) -> Network:
    """A small random network for differential testing.

    Up to ``max_templates`` templates over two shared clocks, one bounded
    integer ``v`` and one channel ``a``.  Clock constraints are non-strict with
    constants in ``[0, max_const]`` (closed automata, so integer time sees the
    same discrete behaviour as dense time).  Some locations are committed;
    updates saturate so they never leave the declared range.
    """
    nb = NetworkBuilder()
    nb.clock("x", "y").channel("a").int_var("v", 0, 3)
    clocks = ("x", "y")
    for ti in range(int(rng.integers(1, max_templates + 1))):
        t = nb.template(f"T{ti}")
        nloc = int(rng.integers(1, max_locations + 1))
        for li in range(nloc):
            inv = ""
            if li > 0 and rng.random() < 0.3:
                inv = f"{clocks[rng.integers(2)]} <= {rng.integers(1, max_const + 1)}"
            committed = li > 0 and not inv and rng.random() < 0.1
            t.location(f"L{li}", invariant=inv, committed=committed)
        for _ in range(int(rng.integers(1, 2 * nloc + 1))):
            src, dst = (f"L{rng.integers(nloc)}" for _ in range(2))
            guard = []
            if rng.random() < 0.6:
                op = ("<=", ">=", "==")[rng.integers(3)]
                guard.append(f"{clocks[rng.integers(2)]} {op} {rng.integers(0, max_const + 1)}")
            if rng.random() < 0.3:
                guard.append(f"v {('<', '>=', '==')[rng.integers(3)]} {rng.integers(0, 4)}")
            updates = []
            if rng.random() < 0.4:
                updates.append(f"{clocks[rng.integers(2)]} = 0")
            if rng.random() < 0.3:
                updates.append(("v = v < 3 ? v + 1 : 3", "v = v > 0 ? v - 1 : 0", "v = 0")
                               [rng.integers(3)])
            sync = None
            r = rng.random()
            if r < 0.15:
                sync = "a!"
            elif r < 0.3:
                sync = "a?"
            t.edge(src, dst, guard=" && ".join(guard), sync=sync, update=", ".join(updates))
    return nb.build()


def random_predicate(rng, net: Network) -> str:
    """A clock-free predicate over the network's locations and ``v``."""
    atoms = []
    for _ in range(int(rng.integers(1, 3))):
        if rng.random() < 0.6:
            ct = net.compiled[rng.integers(len(net.compiled))]
            atoms.append(f"{ct.name}.{ct.loc_names[rng.integers(len(ct.loc_names))]}")
        else:
            atoms.append(f"v {('<', '>=', '==', '!=')[rng.integers(4)]} {rng.integers(0, 4)}")
    if len(atoms) == 1:
        return atoms[0] if rng.random() < 0.7 else f"!{atoms[0]}"
    op = ("&&", "||", "imply")[rng.integers(3)]
    return f"({atoms[0]}) {op} ({atoms[1]})"
