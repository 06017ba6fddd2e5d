"""Smoke test for the `moralscope` extension module.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`,
or copy the cdylib built with `--features extension-module` to
`moralscope.so` somewhere on PYTHONPATH.
"""

import math

import moralscope as ms


def keyword_scorer(premises, hypotheses):
    # Entailed when the hypothesis' value word occurs in the premise.
    out = []
    for p, h in zip(premises, hypotheses):
        word = h.rstrip(".").split()[-1]
        out.append((0.8, 0.1, 0.1) if word in p.lower() else (0.1, 0.8, 0.1))
    return out


def main():
    assert ms.labels() == ["Care", "Fairness", "Loyalty", "Authority", "Purity", "Non-moral"]
    assert len(ms.value_labels()) == 10
    assert ms.hypothesis("Harm").endswith(" harm.")
    assert math.isclose(ms.normalize_entailment(0.3, 0.3, 0.4), 0.5)

    (labels, scores), (nm, _) = ms.classify_nli(
        ["Their betrayal of the team.", "Nice weather today."], keyword_scorer
    )
    assert labels == ["Loyalty"], labels
    assert dict(scores)["Betrayal"] > 0.5
    assert nm == ["Non-moral"]

    prompt = ms.build_prompt("hello")
    assert prompt.startswith("Does the sentence hello convey")
    assert ms.parse_response("Moral. Care/Harm, Fairness/Cheating") == ["Care", "Fairness"]
    assert ms.parse_response("not moral") == ["Non-moral"]
    try:
        ms.parse_response("banana")
    except ValueError:
        pass
    else:
        raise AssertionError("garbage completion parsed")

    assert ms.aggregate([["Care"], ["Harm", "Loyalty"]]) == ["Care", "Loyalty"]
    assert ms.aggregate([["Care"], ["Care"], ["Non-moral"], ["Non-moral"]]) == ["Care"]
    assert ms.aggregate(
        [["Care"], ["Care"], ["Non-moral"], ["Non-moral"]], tie_rule="non_moral_wins"
    ) == ["Non-moral"]
    assert ms.aggregate([["Care"], ["Purity"], ["Loyalty"]]) is None

    m = ms.evaluate([["Care"], ["Non-moral"]], [["Care"], ["Fairness"]])
    assert m["per_label"]["Care"]["f1"] == 1.0
    assert math.isclose(m["weighted"]["f1"], 0.5)

    texts = ["protect the children", "they cheat at cards", "lunch in the city"] * 20
    golds = [["Care"], ["Fairness"], ["Non-moral"]] * 20
    model = ms.SupervisedModel.train(texts, golds, "A", epochs=30, learning_rate=0.05)
    assert model.train_corpus == "A"
    assert len(model.probabilities("protect")) == 6
    assert model.epoch_losses[-1] < model.epoch_losses[0]
    preds = model.predict_many(texts[:3])
    assert preds == [["Care"], ["Fairness"], ["Non-moral"]], preds
    print("moralscope smoke test passed")


if __name__ == "__main__":
    main()
