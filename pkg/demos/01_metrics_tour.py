"""A tour of the cost-efficiency metrics: EX, weighted tokens, PGR, TEP, UTR.

Every value below is computed by the library; the printed narration walks
through what each number means for a routing system.

Run from the repository root:  python demos/01_metrics_tour.py
"""

from tiersql.metrics import DisagreementMatrix, disagreement, ex, pgr, tep, utr, weighted_tokens
from tiersql.model import Tier, TokenUsage

# Execution accuracy is the share of queries whose predicted SQL returns the
# same result set as the gold SQL.
verdicts = [True] * 795 + [False] * (1534 - 795)
print(f"EX over 1534 verdicts with 795 correct: {ex(verdicts) * 100:.2f}%")

# Token cost weights completion tokens more heavily than prompt tokens:
# T = T_in + mu * T_out, with mu = 4 here.
usage = TokenUsage(prompt_tokens=100, completion_tokens=50)
print(f"weighted cost of (100 in, 50 out) at mu=4: {weighted_tokens(usage, mu=4):.0f}")

# PGR: how much of the accuracy gap between the cheapest and the most
# capable pipeline a router recovers. Values above 1 mean the router beat
# the strong baseline outright.
ex_basic, ex_advanced = 51.83, 55.02
for name, ex_routed in [("good router", 55.41), ("weak router", 52.93)]:
    print(f"PGR of {name} at EX {ex_routed}: {pgr(ex_routed, ex_basic, ex_advanced):.3f}")

# TEP: relative accuracy gain per relative token-cost increase over the
# cheapest pipeline. Bigger is more cost-efficient.
t_basic = 695.55
for name, ex_g, t_g in [
    ("always-advanced", 55.02, 13002.91),
    ("routed", 55.41, 7641.51),
]:
    value = tep(ex_g, ex_basic, t_g, t_basic)
    print(f"TEP of {name}: {value * 100:.3f} x10^-2")

# UTR reads a disagreement matrix (rows: oracle label, columns: routed
# tier). Mass on or above the diagonal means complex queries were not sent
# to pipelines too weak for them.
oracle = [Tier.BASIC, Tier.BASIC, Tier.INTERMEDIATE, Tier.ADVANCED, Tier.ADVANCED]
routed = [Tier.BASIC, Tier.ADVANCED, Tier.INTERMEDIATE, Tier.ADVANCED, Tier.BASIC]
matrix = disagreement(oracle, routed)
print(f"disagreement counts: {matrix.counts}")
print(f"agreement {matrix.agreement:.2f}, UTR {utr(matrix):.2f}")

# Routing everything to the most capable tier trivially yields UTR = 1,
# which is why UTR alone cannot rank routers.
lazy = DisagreementMatrix(((0, 0, 3), (0, 0, 2), (0, 0, 5)))
print(f"UTR of route-everything-to-advanced: {utr(lazy):.2f} (trivial, not effective)")
