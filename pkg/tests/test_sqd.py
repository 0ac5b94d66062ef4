import numpy as np
import pytest

from src.determinant import Determinant, hamming_weights, hartree_fock_det, diagonal_energies
from src.eigensolver import fci_ground_state
from src.errors import ArgumentError, ConfigError, EmptyInputError, LengthError
from src.hamiltonian import make_hubbard_chain
from src.sampler import NoiseModel, sample_counts
from src.samples import SampleSet
from src.sqd import (
    SqdConfig,
    estimate_occupancies,
    extsqd_expand,
    make_batches,
    postselect,
    recover_configuration,
    recover_samples,
    sqd_pipeline,
    sqd_run,
)
from utils.helpers import make_rng

SMALL = SqdConfig(n_batches=2, batch_size=200, max_iterations=5, seed=3)


def _fci_samples(ham, shots, noise=None, seed=0):
    _, wavefunction = fci_ground_state(ham)
    return sample_counts(wavefunction, ham.norb, shots, noise or NoiseModel.noiseless(), seed)


class TestPostselection:

    def test_postselect(self):
        samples = SampleSet({"0101": 3, "0111": 2, "1010": 1})
        kept, discarded = postselect(samples, 2, 1, 1)
        assert kept.counts == {"0101": 3, "1010": 1}
        assert discarded == 2

    def test_estimate_occupancies(self):
        occ = estimate_occupancies(SampleSet({"0101": 3, "1010": 1}), 2)
        np.testing.assert_allclose(occ, [0.75, 0.25, 0.75, 0.25])

    def test_estimate_occupancies_errors(self):
        with pytest.raises(EmptyInputError):
            estimate_occupancies(SampleSet({}), 2)
        with pytest.raises(LengthError):
            estimate_occupancies(SampleSet({"010101": 1}), 2)


class TestRecovery:

    def test_physical_input_unchanged(self):
        occ = np.full(4, 0.5)
        assert recover_configuration("0101", occ, 2, 1, 1, make_rng(0)) == "0101"

    def test_removes_least_occupied_bit(self):
        # alfa ma dwa elektrony, orbital 1 ma zerowe obsadzenie
        occ = np.array([1.0, 0.0, 1.0, 0.0])
        for seed in range(20):
            assert recover_configuration("0111", occ, 2, 1, 1, make_rng(seed)) == "0101"

    def test_adds_most_occupied_bit(self):
        occ = np.array([0.0, 1.0, 1.0, 0.0])
        for seed in range(20):
            assert recover_configuration("0100", occ, 2, 1, 1, make_rng(seed)) == "0110"

    def test_result_always_physical(self):
        rng = make_rng(5)
        occ = rng.random(8)
        for key in ("11111111", "00000000", "10110111", "00010000"):
            fixed = recover_configuration(key, occ, 4, 2, 2, rng)
            assert hamming_weights(fixed, 4) == (2, 2)

    def test_clearing_frequency_follows_occupancy(self):
        # orbital 1 ma obsadzenie 0.1, więc jest gaszony w 90% prób
        occ = np.array([0.9, 0.1, 1.0, 0.0])
        rng = make_rng(12)
        trials = 100_000
        cleared = sum(recover_configuration("0111", occ, 2, 1, 1, rng) == "0101" for _ in range(trials))
        assert cleared / trials == pytest.approx(0.9, abs=0.01)

    def test_wrong_length(self):
        with pytest.raises(LengthError):
            recover_configuration("010", np.zeros(4), 2, 1, 1, make_rng(0))

    def test_recover_samples_keeps_counts(self):
        samples = SampleSet({"0101": 3, "0111": 2, "0000": 4})
        recovered, n_recovered = recover_samples(samples, np.full(4, 0.5), 2, 1, 1, make_rng(1))
        assert recovered.shots == 9
        assert n_recovered == 6
        assert all(hamming_weights(k, 2) == (1, 1) for k in recovered.counts)


class TestBatches:

    def test_batches(self):
        recovered = SampleSet({"0101": 5, "0110": 3, "1001": 2})
        carry = {Determinant(0b10, 0b10)}
        batches = make_batches(recovered, SqdConfig(n_batches=4, batch_size=6), carry, make_rng(2))
        assert len(batches) == 4
        for batch in batches:
            assert batch == sorted(set(batch))
            assert Determinant(0b10, 0b10) in batch
            assert len(batch) <= 6 + 1

    def test_reproducible(self):
        recovered = SampleSet({"0101": 5, "0110": 3, "1001": 2})
        cfg = SqdConfig(n_batches=3, batch_size=4)
        assert make_batches(recovered, cfg, (), make_rng(9)) == make_batches(recovered, cfg, (), make_rng(9))

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            make_batches(SampleSet({}), SqdConfig(), (), make_rng(0))


class TestSqdRun:

    def test_dimer_reaches_fci(self, dimer):
        e_fci, _ = fci_ground_state(dimer)
        trace = sqd_run(dimer, _fci_samples(dimer, 2000), SMALL)
        assert trace.e_last == pytest.approx(e_fci, abs=1e-8)
        assert trace.convergence_reason == "energy"
        assert trace.discarded == 0
        assert len(trace.basis) == len(trace.vector)

    def test_max_iter_reason(self, dimer):
        cfg = SqdConfig(n_batches=2, batch_size=50, max_iterations=1)
        trace = sqd_run(dimer, _fci_samples(dimer, 500), cfg)
        assert trace.convergence_reason == "max_iter"
        assert len(trace.iterations) == 1
        assert trace.e_first == trace.e_last

    def test_noisy_chain_is_variational(self, chain4):
        e_fci, _ = fci_ground_state(chain4)
        samples = _fci_samples(chain4, 5000, NoiseModel(p_readout=0.02, p_xtalk=0.0), seed=4)
        trace = sqd_pipeline(chain4, samples, SMALL)
        assert trace.discarded > 0
        assert trace.e_last >= e_fci - 1e-9
        assert trace.e_ext <= trace.e_last + 1e-9
        assert trace.e_ext >= e_fci - 1e-9
        assert trace.e_last == pytest.approx(e_fci, abs=1e-2)
        assert all(it.recovered_shots > 0 for it in trace.iterations)

    def test_workers_do_not_change_result(self, chain4):
        samples = _fci_samples(chain4, 3000, NoiseModel(p_readout=0.01, p_xtalk=0.0), seed=6)
        serial = sqd_run(chain4, samples, SqdConfig(n_batches=4, batch_size=100, max_iterations=3, seed=1))
        threaded = sqd_run(
            chain4, samples, SqdConfig(n_batches=4, batch_size=100, max_iterations=3, seed=1, workers=3)
        )
        assert [it.batch_energies for it in serial.iterations] == [it.batch_energies for it in threaded.iterations]

    def test_repeated_subspace_is_not_convergence(self, dimer):
        # 1010 prawie nigdy nie trafia do partii, więc ta sama partia się powtarza
        samples = SampleSet({"0101": 10**6 - 1, "1010": 1})
        trace = sqd_run(dimer, samples, SqdConfig(n_batches=1, batch_size=5, max_iterations=4, seed=2))
        assert trace.convergence_reason == "max_iter"
        assert len(trace.iterations) == 4

    def test_complete_subspace_converges(self, dimer):
        samples = SampleSet({"0101": 1000})
        trace = sqd_run(dimer, samples, SqdConfig(n_batches=1, batch_size=5, max_iterations=4))
        assert trace.convergence_reason == "energy"
        assert len(trace.iterations) == 2

    def test_exact_samples_reach_fci(self, chain4):
        e_fci, _ = fci_ground_state(chain4)
        trace = sqd_run(chain4, _fci_samples(chain4, 200_000, seed=0), SqdConfig(seed=0))
        assert len(trace.iterations) <= 5
        assert abs(trace.e_last - e_fci) < 1e-8

    @pytest.mark.slow
    def test_energies_are_variational_on_chains(self):
        references = {}
        for run in range(200):
            L = 2 + run % 5
            U = 1.0 + (run // 5) % 8
            ham = make_hubbard_chain(L, U, 1.0, (L + 1) // 2, L // 2)
            if (L, U) not in references:
                references[(L, U)] = fci_ground_state(ham)[0]
            e_fci = references[(L, U)]
            samples = _fci_samples(ham, 1000, NoiseModel(p_readout=0.02, p_xtalk=0.0), seed=run)
            cfg = SqdConfig(n_batches=2, batch_size=100, max_iterations=2, seed=run)
            trace = sqd_pipeline(ham, samples, cfg)
            for it in trace.iterations:
                assert min(it.batch_energies) >= e_fci - 1e-10
            assert trace.e_ext <= trace.e_last + 1e-10
            assert trace.e_ext >= e_fci - 1e-10

    @pytest.mark.slow
    def test_recovery_improves_noisy_chain6(self):
        ham = make_hubbard_chain(6, 4.0, 1.0, 3, 3)
        e_fci, wavefunction = fci_ground_state(ham)
        noise = NoiseModel(p_readout=0.02, p_xtalk=0.0)
        improved = 0
        for seed in range(10):
            samples = sample_counts(wavefunction, 6, 50_000, noise, seed)
            physical, _ = postselect(samples, 6, 3, 3)
            recovered, _ = recover_samples(samples, estimate_occupancies(physical, 6), 6, 3, 3, make_rng(seed))
            assert all(hamming_weights(key, 6) == (3, 3) for key in recovered.counts)

            trace = sqd_run(ham, samples, SqdConfig(seed=seed))
            assert all(det.is_physical(3, 3) for det in trace.basis)
            if trace.e_last - e_fci <= trace.e_first - e_fci + 1e-9:
                improved += 1
        assert improved >= 9

    def test_no_physical_samples(self, dimer):
        with pytest.raises(EmptyInputError):
            sqd_run(dimer, SampleSet({"0111": 5, "0000": 1}), SMALL)

    def test_width_mismatch(self, dimer):
        with pytest.raises(LengthError):
            sqd_run(dimer, SampleSet({"010101": 5}), SMALL)

    def test_trace_json(self, dimer):
        trace = sqd_run(dimer, _fci_samples(dimer, 500), SMALL)
        data = trace.to_dict()
        assert data["e_last"] == trace.e_last
        assert len(data["basis"][0]) == 4
        assert data["iterations"][0]["iteration"] == 1


class TestExtSqd:

    def test_single_excitations_lower_energy(self, dimer):
        hf = hartree_fock_det(2, 1, 1)
        e_hf = float(diagonal_energies(dimer, [hf])[0])
        energy, dimension = extsqd_expand(dimer, [hf], [1.0])
        assert dimension == 3
        assert energy < e_hf

    def test_threshold_skips_small_coefficients(self, dimer):
        hf = hartree_fock_det(2, 1, 1)
        _, dimension = extsqd_expand(dimer, [hf], [1e-6], SqdConfig(extsqd_ci_threshold=1e-3))
        assert dimension == 1

    def test_argument_errors(self, dimer):
        with pytest.raises(ArgumentError):
            extsqd_expand(dimer, [], [])
        with pytest.raises(ArgumentError):
            extsqd_expand(dimer, [hartree_fock_det(2, 1, 1)], [1.0, 0.0])


class TestSqdConfig:

    @pytest.mark.parametrize(
        "kwargs",
        [{"n_batches": 0}, {"batch_size": 0}, {"max_iterations": 0}, {"workers": 0}, {"energy_tol": 0.0}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SqdConfig(**kwargs)

    def test_from_dict(self):
        cfg = SqdConfig.from_dict({"n_batches": 3, "seed": 11})
        assert (cfg.n_batches, cfg.seed) == (3, 11)
        assert SqdConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ConfigError):
            SqdConfig.from_dict({"batches": 3})
