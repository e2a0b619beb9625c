"""Smoke test for the selkit extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
then run:
    python python/smoke_test.py
"""

import selkit

TEXT = "Steve became CEO of Apple in 1997 ."
SEL = "((person: Steve (work for: Apple)) (organization: Apple))"


def main():
    assert selkit.__version__

    parsed = selkit.parse_sel(SEL)
    assert parsed["diagnostics"] == []
    assert selkit.serialize_sel(parsed["tree"]) == SEL

    # tolerant mode repairs a missing close and reports it
    broken = selkit.parse_sel("((person: Steve", mode="tolerant")
    assert broken["diagnostics"]
    try:
        selkit.parse_sel("((person: Steve")
    except ValueError:
        pass
    else:
        raise AssertionError("strict parse accepted unbalanced input")

    ssi = selkit.build_ssi("conll03", markers="angle")
    assert ssi == "<spot> location <spot> miscellaneous <spot> organization <spot> person <text>", ssi

    example = {"id": "s1", "text": TEXT}
    grounded, report = selkit.sel_to_record(SEL, example, "relation")
    assert grounded["relations"][0]["head"]["start"] == 0
    assert grounded["relations"][0]["tail"]["start"] == 4
    assert selkit.record_to_sel(grounded, "relation") == SEL

    result = selkit.score([grounded], [grounded], task="relation")
    for name, s in result["metrics"].items():
        assert s["f1"] == 1.0, (name, s)

    with_null = selkit.inject_rejection(SEL, ["location"], ["kill"], 1.0, seed=3)
    assert with_null.count("[null]") == 2, with_null

    out = selkit.span_corrupt(TEXT.split(), seed=1)
    assert "<extra_id_0>" in out["x_prime"]

    print("selkit", selkit.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
