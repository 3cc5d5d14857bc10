from prototext.rng import SplitMix64, fnv1a64, uniforms


def test_fnv1a64_known_vectors():
    # reference values for the 64-bit FNV-1a parameters
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"hello") == 0xA430D84680AABD0B


def test_vectorized_uniforms_match_sequential():
    gen = SplitMix64(123456789)
    sequential = [gen.uniform() for _ in range(500)]
    assert list(uniforms(123456789, 500)) == sequential


def test_uniforms_in_unit_interval():
    u = uniforms(42, 10_000)
    assert (u >= 0.0).all() and (u < 1.0).all()


def test_shuffle_deterministic_and_permutes():
    a = list(range(50))
    b = list(range(50))
    SplitMix64(9).shuffle(a)
    SplitMix64(9).shuffle(b)
    assert a == b
    assert sorted(a) == list(range(50))
    c = list(range(50))
    SplitMix64(10).shuffle(c)
    assert c != a  # overwhelmingly likely for distinct seeds


def test_sample_distinct_without_then_with_replacement():
    picks = SplitMix64(3).sample_distinct(10, 10)
    assert sorted(picks) == list(range(10))
    over = SplitMix64(3).sample_distinct(3, 7)
    assert len(over) == 7
    assert set(over) <= {0, 1, 2}
