"""Greedy-decode a toy ternary model on both backends.

The point is not the text (there is no text; tokens are just ids) but
the equivalence: the segment-reduction backend quantizes and multiplies
exactly like the dense integer reference, so the argmax chain never
diverges, token for token.
"""

from rsrmv import build_toy_model, greedy_decode

model = build_toy_model(seed=42, d=64, V=256, depth=2)
print(f"model d=64 V=256 depth=2, digest {model.digest()[:16]}...")

prompt = [7, 42, 199]
naive_toks, naive_stats = greedy_decode(model, "naive", prompt, steps=64)
rsr_toks, rsr_stats = greedy_decode(model, "rsr", prompt, steps=64)

print(f"\nprompt {prompt}")
print(f"naive: {naive_toks[:16]} ...")
print(f"rsr:   {rsr_toks[:16]} ...")
assert naive_toks == rsr_toks, "backends diverged"

print(f"\nall 64 tokens identical")
print(f"naive {naive_stats.tokens_per_second:8.0f} tok/s")
print(f"rsr   {rsr_stats.tokens_per_second:8.0f} tok/s")
