"""Weak values along the three-path interferometer, step by step.

A particle is prepared in an equal superposition of three paths and
only runs ending in a particular final superposition are kept. Between
preparation and postselection, each path projector has a weak value:
the amplitude-weighted answer to "was the particle here?". Some sites
get 1, one gets -1, and the two crossing points get exactly 0.
"""

from wvlab import builtin, run_weak_values, transition_amplitude

sc = builtin("three-path")
print("three-path interferometer")
print(f"  dimension      {sc.dim}")
print(f"  stages         {' -> '.join(sc.timeline.stages)}")
print(f"  sites          {', '.join(s.label for s in sc.sites)}")
print()

rep = run_weak_values(sc)
print(f"postselection amplitude squared: {rep.postselection_probability:.6f} (= 1/9)")
print()

def flt(x: float) -> float:
    return x if abs(x) > 1e-12 else 0.0


print("site   stage   weak value      transition amplitude")
for row in rep.weak_values:
    wv = row.value
    print(
        f"{row.site:<7}{row.stage:<8}"
        f"{flt(wv.real):+.3f}{flt(wv.imag):+.3f}i    "
        f"{flt(row.numerator.real):+.4f}{flt(row.numerator.imag):+.4f}i"
    )
print()

print("Two sanity checks come for free:")
print()

# The paths at any one time are mutually exclusive and exhaustive, so
# their weak values must add up to 1 even when one of them is -1.
for rule in rep.sum_rules:
    total = rule.total
    print(f"  sum over {{{', '.join(rule.sites)}}} at {rule.stage}: {total.real:+.6f}")
print()

# A null weak value is the same statement as a null transition
# amplitude: the numerator vanishes while the denominator stays put.
for label in ("O", "O'"):
    site = sc.site(label)
    tau = transition_amplitude(sc.timeline, sc.prepost, site.projector, site.stage)
    print(f"  |amplitude through {label}|  = {abs(tau):.2e}")
print()
print("The crossings O and O' sit on two overlapping paths, yet the")
print("pre/postselected particle is, in this amplitude sense, never there.")
