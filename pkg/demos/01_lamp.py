"""The lamp and its user, checked with zones.

A first press turns the lamp on; a second press within five time units
makes it bright.  We ask whether the lamp can become bright at all, print
the witness the checker found, and then slow the user down so that the
same question has no witness.

    python3 demos/01_lamp.py
"""

from twincheck.automata.library import lamp_network
from twincheck.verifier import check, explicit_oracle

net = lamp_network()
v = check(net, "E<> Lamp.bright")
print(f"E<> Lamp.bright: {'satisfied' if v.satisfied else 'not satisfied'} "
      f"after {v.states_explored} symbolic states")
for i, step in enumerate(v.evidence.steps):
    print(f"  {i}. {step.action}\n       now in {', '.join(step.locations)}")

# The same question answered by brute force over integer time.
print("integer-time oracle agrees:",
      explicit_oracle(net, "E<> Lamp.bright", horizon=10).satisfied == v.satisfied)

slow = lamp_network(slow_user=True)
v = check(slow, "E<> Lamp.bright")
print(f"slow user: {'satisfied' if v.satisfied else 'not satisfied'} "
      f"after {v.states_explored} symbolic states")

# A[] !Lamp.bright fails for the quick user; its counterexample is the witness above.
v = check(net, "A[] !Lamp.bright")
print(f"A[] !Lamp.bright: {v.satisfied}, counterexample ends in {v.evidence.final.locations}")
