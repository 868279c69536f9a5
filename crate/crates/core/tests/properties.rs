use proptest::prelude::*;

use mixtomo::lab::{fit_loglog, random_mixed_state, trace_distance_bound};
use mixtomo::measure::{Dataset, Povm4, ProjectiveEnsemble, Scheme};
use mixtomo::model::Measurement;
use mixtomo::qcore::{all_pauli_kl, infidelity, kl_divergence, trace_distance, PauliString};
use mixtomo::seed::{child_rng, child_seed};

fn pauli_label() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['I', 'X', 'Y', 'Z']), 1..=6)
        .prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_terms_roundtrip(coeff in -10.0f64..10.0, label in pauli_label()) {
        let p: PauliString = format!("{coeff} {label}").parse().unwrap();
        prop_assert_eq!(p.label(), label);
        let again: PauliString = p.to_string().parse().unwrap();
        prop_assert_eq!(again.to_string(), p.to_string());
    }

    #[test]
    fn child_seeds_depend_on_the_whole_path(root in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assert_eq!(child_seed(root, &[a, b]), child_seed(root, &[a, b]));
        if a != b {
            prop_assert_ne!(child_seed(root, &[a, b]), child_seed(root, &[b, a]));
        }
    }

    #[test]
    fn exact_power_laws_are_recovered(slope in -3.0f64..3.0, scale in 1e-3f64..1e3) {
        let pts: Vec<(f64, f64)> = [1.0, 3.0, 10.0, 30.0, 100.0]
            .iter()
            .map(|&x: &f64| (x, scale * x.powf(slope)))
            .collect();
        let fit = fit_loglog(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!(fit.r_squared > 1.0 - 1e-10 || slope.abs() < 1e-6);
    }

    #[test]
    fn povm_reconstruction_inverts_probabilities(seed in any::<u64>(), n in 1usize..=3) {
        let rho = random_mixed_state(n, &mut child_rng(seed, &[])).unwrap();
        let povm = Povm4::new(n).unwrap();
        let q = povm.probabilities(&rho).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(q.iter().all(|&p| p >= -1e-15));
        let back = povm.reconstruct(&q).unwrap();
        let err = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn state_distances_are_consistent(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = child_rng(seed, &[]);
        let rho = random_mixed_state(n, &mut rng).unwrap();
        let sigma = random_mixed_state(n, &mut rng).unwrap();
        let td = trace_distance(&rho, &sigma).unwrap();
        let inf = infidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&td));
        prop_assert!((-1e-12..=1.0).contains(&inf));
        prop_assert!((trace_distance(&sigma, &rho).unwrap() - td).abs() < 1e-12);
        // Fuchs-van de Graaf: 1 - F <= D
        prop_assert!(1.0 - (1.0 - inf).sqrt() <= td + 1e-10);
        prop_assert!(td <= trace_distance_bound(n, all_pauli_kl(&rho, &sigma).unwrap()) + 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_the_diagonal(w in prop::collection::vec(0.01f64..1.0, 2..8)) {
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let q: Vec<f64> = w.iter().rev().map(|x| x / total).collect();
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-14);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-14);
    }

    #[test]
    fn datasets_roundtrip_through_jsonl(seed in any::<u64>(), shots in 1usize..20, povm in any::<bool>()) {
        let rho = random_mixed_state(2, &mut child_rng(seed, &[])).unwrap();
        let scheme = if povm { Scheme::Povm4 } else { Scheme::Projective };
        let data = Measurement::full(scheme, 2).unwrap().sample(&rho, shots, seed).unwrap();
        let text = data.to_jsonl_string();
        let back = Dataset::read_jsonl(text.as_bytes()).unwrap();
        prop_assert_eq!(back.to_jsonl_string(), text);
        let bases = if povm { 1 } else { ProjectiveEnsemble::all(2).unwrap().len() };
        prop_assert_eq!(back.len(), bases * shots);
    }
}
