import itertools

import numpy as np
import pytest

from src.errors import ArgumentError, ConflictError, InconsistencyError, ParseError, RangeError
from src.hamiltonian import (
    FermionHamiltonian,
    load_fcidump,
    make_hubbard_chain,
    parse_fcidump,
    random_hamiltonian,
    save_fcidump,
    write_fcidump,
)


class TestParseFcidump:

    def test_dimer_fields(self, dimer_text, dimer):
        ham = parse_fcidump(dimer_text)
        assert ham.norb == 2
        assert (ham.n_alpha, ham.n_beta) == (1, 1)
        assert ham.e_core == 0.0
        assert ham == dimer

    def test_one_body_symmetry_fill(self, dimer_text):
        ham = parse_fcidump(dimer_text)
        assert ham.h[0, 1] == ham.h[1, 0] == -1.0

    def test_two_body_eight_fold_fill(self):
        text = " &FCI NORB=3,NELEC=2,MS2=0, &END\n 0.25 1 2 3 1\n"
        ham = parse_fcidump(text)
        p, q, r, s = 0, 1, 2, 0
        for idx in [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                    (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)]:
            assert ham.g[idx] == 0.25

    def test_electron_counts_from_ms2(self):
        ham = parse_fcidump(" &FCI NORB=4,NELEC=5,MS2=1 /\n")
        assert (ham.n_alpha, ham.n_beta) == (3, 2)

    def test_index_out_of_range(self):
        text = " &FCI NORB=2,NELEC=2,MS2=0 &END\n 1.0 3 1 0 0\n"
        with pytest.raises(RangeError) as info:
            parse_fcidump(text)
        assert info.value.line_number == 2

    def test_one_body_with_single_zero_index(self):
        with pytest.raises(RangeError):
            parse_fcidump(" &FCI NORB=2,NELEC=2,MS2=0 &END\n 1.0 1 0 0 0\n")

    def test_odd_parity(self):
        with pytest.raises(InconsistencyError):
            parse_fcidump(" &FCI NORB=2,NELEC=3,MS2=0 &END\n")

    def test_conflicting_duplicates(self):
        text = " &FCI NORB=2,NELEC=2,MS2=0 &END\n 0.5 1 2 0 0\n 0.6 2 1 0 0\n"
        with pytest.raises(ConflictError) as info:
            parse_fcidump(text)
        assert info.value.line_number == 3

    def test_consistent_duplicates_accepted(self):
        text = " &FCI NORB=2,NELEC=2,MS2=0 &END\n 0.5 1 2 0 0\n 0.5 2 1 0 0\n"
        assert parse_fcidump(text).h[0, 1] == 0.5

    def test_missing_header(self):
        with pytest.raises(ParseError) as info:
            parse_fcidump(" 1.0 1 1 0 0\n")
        assert info.value.line_number == 1

    def test_malformed_header_value(self):
        with pytest.raises(ParseError):
            parse_fcidump(" &FCI NORB=two,NELEC=2,MS2=0 &END\n")

    def test_short_integral_line(self):
        with pytest.raises(ParseError) as info:
            parse_fcidump(" &FCI NORB=2,NELEC=2,MS2=0 &END\n 1.0 1 1 0\n")
        assert info.value.line_number == 2

    def test_flexible_header(self):
        text = "&fci norb = 2 ,\n nelec=2, ms2=0,\n orbsym=1,\n 1,\n isym=1\n&end\n 1.5D-01 1 1 0 0\n\n"
        ham = parse_fcidump(text)
        assert ham.norb == 2
        assert ham.h[0, 0] == pytest.approx(0.15)


class TestWriteFcidump:

    def test_round_trip_dimer(self, dimer):
        assert parse_fcidump(write_fcidump(dimer)) == dimer

    def test_round_trip_random_exact(self):
        ham = random_hamiltonian(3, 2, 1, seed=11)
        back = parse_fcidump(write_fcidump(ham))
        assert back == ham
        assert np.array_equal(back.g, ham.g)
        assert back.e_core == ham.e_core

    @pytest.mark.parametrize("seed", range(100))
    def test_round_trip_random_sizes(self, seed):
        rng = np.random.default_rng(seed)
        norb = int(rng.integers(1, 5))
        n_alpha, n_beta = (int(n) for n in rng.integers(0, norb + 1, size=2))
        ham = random_hamiltonian(norb, n_alpha, n_beta, seed=seed, scale=float(rng.uniform(0.1, 3.0)))
        assert parse_fcidump(write_fcidump(ham)) == ham

    def test_zero_hamiltonian(self):
        ham = FermionHamiltonian(2, 1, 1, np.zeros((2, 2)), np.zeros((2, 2, 2, 2)))
        text = write_fcidump(ham)
        body = text.split("&END")[1].split()
        assert len(body) == 5
        assert body[1:] == ["0", "0", "0", "0"]
        assert float(body[0]) == 0.0

    def test_one_line_per_symmetry_class(self):
        ham = random_hamiltonian(3, 1, 1, seed=3)
        lines = [line for line in write_fcidump(ham).split("&END")[1].splitlines() if line.strip()]
        two_body = [tuple(line.split()[1:]) for line in lines if "0" not in line.split()[1:]]
        assert len(two_body) == len(set(two_body))
        # liczba klas symetrii (pq|rs) dla M=3: n(n+1)/2 przy n = M(M+1)/2
        assert len(two_body) == 21

    def test_file_wrappers(self, tmp_path, dimer):
        path = tmp_path / "dimer.fcidump"
        save_fcidump(dimer, str(path))
        assert load_fcidump(str(path)) == dimer


class TestHamiltonianObject:

    def test_dict_round_trip(self):
        ham = random_hamiltonian(3, 2, 2, seed=5)
        assert FermionHamiltonian.from_dict(ham.to_dict()) == ham

    def test_rejects_asymmetric_h(self):
        h = np.array([[0.0, 1.0], [0.5, 0.0]])
        with pytest.raises(ArgumentError):
            FermionHamiltonian(2, 1, 1, h, np.zeros((2,) * 4))

    def test_random_has_full_symmetry(self):
        g = random_hamiltonian(4, 2, 2, seed=1).g
        for p, q, r, s in itertools.product(range(4), repeat=4):
            assert g[p, q, r, s] == pytest.approx(g[r, s, q, p])


class TestHubbardChain:

    def test_integrals(self):
        ham = make_hubbard_chain(3, 2.5, 0.7, 1, 2)
        assert ham.h[0, 1] == ham.h[1, 0] == -0.7
        assert ham.h[1, 2] == -0.7
        assert ham.h[0, 2] == 0.0
        assert ham.g[1, 1, 1, 1] == 2.5
        assert ham.g[0, 0, 1, 1] == 0.0
        assert ham.e_core == 0.0

    def test_too_short(self):
        with pytest.raises(ArgumentError):
            make_hubbard_chain(1, 4.0, 1.0, 1, 1)
