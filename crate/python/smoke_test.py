"""Smoke test for the `mvot` extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/mvot-*.whl
"""

import mvot


def main():
    params = mvot.keygen(54, n=5, k=5, dim=512, m=2000)
    assert params.m == 2000
    paper_bits, refined_bits = mvot.work_factor(params)
    assert abs(paper_bits - 54.83) < 0.05, paper_bits
    assert paper_bits == refined_bits

    try:
        mvot.keygen(54, k=4, m=2000)
    except ValueError as e:
        assert "43.86" in str(e)
    else:
        raise AssertionError("k=4, m=2000 should not meet 54 bits")

    small = mvot.ProtocolParams(n=5, m=200, k=5, dim=64, tr=3)
    pop = mvot.Population(num_identities=10, dim=64, n_channels=5, seed=1)
    template = pop.ground_truth(3)
    assert len(template) == 5 and len(template[0]) == 64
    assert abs(mvot.cosine_similarity(template[0], template[0]) - 1.0) < 1e-6

    helper = mvot.enroll(template, small, seed=7)
    assert helper.num_commitments == 1
    own = helper.verify(template, tr=1)
    assert own["accepted"] and own["hash_count"] == 1, own
    assert helper.verify(pop.genuine_query(3, seed=2))["accepted"]
    stranger = helper.verify(pop.unrelated(seed=5))
    assert not stranger["accepted"] and stranger["subset"] is None

    blob = helper.to_bytes()
    assert blob[:4] == b"MVOT"
    back = mvot.Helper.from_bytes(blob)
    assert back.to_bytes() == blob
    assert back.verify(template, tr=1) == own

    try:
        mvot.Helper.from_bytes(b"")
    except ValueError:
        pass
    else:
        raise AssertionError("empty stream must be rejected")

    tiny = mvot.keygen(3, n=2, k=2, dim=8, m=3)
    tiny_pop = mvot.Population(num_identities=1, dim=8, n_channels=2)
    attack = mvot.enroll(tiny_pop.ground_truth(0), tiny, seed=1).brute_force(seed=4)
    assert attack["succeeded"] and attack["tries_to_success"] <= 16

    print("smoke test passed")


if __name__ == "__main__":
    main()
