import numpy as np
import pytest

from spinfer.core import Literal
from spinfer.datasets import (
    FieldSchema, GLYPHS, N_CELLS, digit_prototypes, digit_schema, gen_digits, gen_digits_noisy,
    gen_penicillin, load_csv, load_labels, save_csv, save_labels, save_values_csv,
)
from spinfer.fixpoint import RuleBase, pr_closure
from spinfer.miner import MinerConfig, mine_all


def test_boolean_csv_roundtrip(tmp_path, t4):
    p = tmp_path / "t4.csv"
    save_csv(t4, p)
    s = load_csv(p)
    assert s.objects == t4.objects and s.predicates == t4.predicates
    assert (s.truth == t4.truth).all()


def test_boolean_tokens(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("id,a,b\nx,true,0\ny,N,Yes\n")
    s = load_csv(p)
    assert s.truth.tolist() == [[True, False], [False, True]]


def test_one_hot_field(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,color,big\nx,g,1\ny,r,0\n")
    schema = FieldSchema((("color", ("r", "g", "b")),))
    s = load_csv(p, schema)
    assert s.predicates == ("color=r", "color=g", "color=b", "big")
    assert s.truth[0].tolist() == [False, True, False, True]


def test_value_outside_alphabet(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,color\nx,g\ny,purple\n")
    schema = FieldSchema((("color", ("r", "g", "b")),))
    with pytest.raises(ValueError, match=r"row 3.*color"):
        load_csv(p, schema)


def test_non_boolean_without_schema(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,color\nx,g\n")
    with pytest.raises(ValueError, match="color"):
        load_csv(p)


def test_ragged_and_empty(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("id,a,b\nx,1\n")
    with pytest.raises(ValueError, match="row 2"):
        load_csv(p)
    e = tmp_path / "e.csv"
    e.write_text("")
    with pytest.raises(ValueError):
        load_csv(e)
    h = tmp_path / "h.csv"
    h.write_text("id,a\n")
    with pytest.raises(ValueError):
        load_csv(h)


def test_schema_json_roundtrip(tmp_path):
    schema = digit_schema()
    p = tmp_path / "s.json"
    p.write_text(schema.to_json())
    assert FieldSchema.load(p) == schema


def test_values_csv_reloads_with_schema(tmp_path):
    data = gen_digits(1)
    p = tmp_path / "v.csv"
    save_values_csv(data, p)
    s = load_csv(p, data.schema)
    assert (s.truth == data.system.truth).all()


def test_labels_roundtrip(tmp_path):
    data = gen_digits(1)
    p = tmp_path / "l.csv"
    save_labels(data, p)
    assert load_labels(p) == dict(zip(data.system.objects, data.labels))


def test_glyph_shapes():
    assert len(GLYPHS) == 12
    for g in GLYPHS.values():
        assert len(g) == 6 and all(len(row) == 4 for row in g)
    assert len(digit_schema().predicate_names()) == 65


def test_gen_digits_sizes():
    d = gen_digits(30)
    assert d.system.n_objects == 360
    rows = {tuple(r) for r in d.system.truth.tolist()}
    assert len(rows) == 12
    assert sorted(d.labels).count("7") == 30
    one = gen_digits(1)
    assert len({tuple(r) for r in one.system.truth.tolist()}) == 12


def test_one_hot_invariant():
    d = gen_digits_noisy(5, 0.2, seed=4)
    schema = d.schema
    col = 0
    for _, alpha in schema.fields:
        block = d.system.truth[:, col : col + len(alpha)]
        assert (block.sum(axis=1) == 1).all()
        col += len(alpha)


def test_prototypes_are_full_descriptions():
    protos = digit_prototypes()
    assert len(protos) == 12 and len(set(protos.values())) == 12
    for lits in protos.values():
        assert len(lits) == 65 and len({l.predicate for l in lits}) == 65


def test_noise_zero_is_clean():
    a, b = gen_digits(3), gen_digits_noisy(3, 0.0, seed=9)
    assert (a.system.truth == b.system.truth).all() and a.labels == b.labels


def test_noise_is_deterministic(tmp_path):
    a, b = gen_digits_noisy(30, 0.1, seed=5), gen_digits_noisy(30, 0.1, seed=5)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    save_csv(a.system, pa)
    save_csv(b.system, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_noise_rate():
    d = gen_digits_noisy(30, 0.1, seed=0)
    frac = d.metadata["perturbed_slots"] / d.metadata["total_slots"]
    assert abs(frac - 0.1) <= 0.02
    assert d.metadata["total_slots"] == 360 * (N_CELLS - 1)


def test_noise_bounds():
    with pytest.raises(ValueError):
        gen_digits_noisy(3, 0.5, seed=0)
    with pytest.raises(ValueError):
        gen_digits(0)


@pytest.mark.parametrize("n,counts", [(200, (95, 5, 90, 10)), (20, (9, 1, 9, 1))])
def test_penicillin_counts(n, counts):
    s = gen_penicillin(n)
    t = s.truth
    assert t[:, 0].all() and t[:, 1].all()
    r, e = t[:, 2], t[:, 3]
    assert ((r & ~e).sum(), (r & e).sum(), (~r & e).sum(), (~r & ~e).sum()) == counts


def test_penicillin_bad_sizes():
    with pytest.raises(ValueError):
        gen_penicillin(21)
    with pytest.raises(ValueError):
        gen_penicillin(10)


def test_penicillin_msr_predicts_no_quick_recovery():
    s = gen_penicillin(200)
    base = RuleBase.from_mined(mine_all(s, MinerConfig(max_premise_len=3)).msr, s.n_objects)
    S, P, R, E = (Literal(i) for i in range(4))
    closed = pr_closure({S, P, R}, base)
    assert -E in closed and E not in closed
