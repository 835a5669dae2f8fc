"""Reference BLEU values from NLTK, used to freeze expected values in the C++ tests.

corpus: BLEU-4, uniform weights, epsilon smoothing (1e-9) on zero-match orders.
sentence reward: BLEU-4 with add-one smoothing on orders >= 2.
"""
from nltk.translate.bleu_score import SmoothingFunction, corpus_bleu, sentence_bleu

eps = SmoothingFunction(epsilon=1e-9).method1
add_one = SmoothingFunction().method2


def corpus(preds, refs):
    return 100.0 * corpus_bleu([[r.split()] for r in refs], [p.split() for p in preds],
                               smoothing_function=eps)


def sentence(pred, ref):
    return sentence_bleu([ref.split()], pred.split(), smoothing_function=add_one)


cases = {
    "the cat sat | the cat sat down": corpus(["the cat sat"], ["the cat sat down"]),
    "two-pair corpus": corpus(["records a sound file", "gets the name of the current user"],
                              ["records a music file", "returns the name of the user"]),
    "zero overlap": corpus(["a b c d"], ["e f g h"]),
}
for k, v in cases.items():
    print(f"corpus  {k:40s} {v:.12f}")

for p, r in [("records a sound file", "records a music file"),
             ("the cat sat", "the cat sat down"),
             ("returns the name of the user", "returns the user name")]:
    print(f"sentence {p!r} vs {r!r}: {sentence(p, r):.12f}")
