use mccd_core::bits::Bits;
use mccd_core::compiler::{compile_with, CompileOptions, DetectorMap};
use mccd_core::geometry::build_layout;
use mccd_core::logical::{sample_mirror, CircuitType};
use mccd_core::sim::{tableau_run, NoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn parities(map: &DetectorMap, record: &Bits) -> (Vec<bool>, Vec<bool>) {
    let dets = map.detector_events().iter().map(|e| record.parity(e)).collect();
    let obs = map.observables.iter().map(|e| record.parity(e)).collect();
    (dets, obs)
}

#[test]
fn noiseless_tableau_detectors_are_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in [3, 5] {
        let layout = build_layout(d).unwrap();
        for (kind, q, depth) in [(CircuitType::I, 1, 8), (CircuitType::I, 2, 12), (CircuitType::II, 2, 8), (CircuitType::II, 4, 12)] {
            for rep in 0..5 {
                let c = sample_mirror(kind, q, depth, &mut rng).unwrap();
                let (phys, map) = compile_with(&c, &layout, &NoiseModel::noiseless(), &CompileOptions::default()).unwrap();
                let rec = tableau_run(&phys, rep);
                let (dets, obs) = parities(&map, &rec.outcomes);
                let bad: Vec<usize> = dets.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
                assert!(bad.is_empty(), "d={d} {kind} q={q}: detectors {bad:?} fired\n{}", c.to_text());
                assert!(obs.iter().all(|&b| !b), "observable fired\n{}", c.to_text());
            }
        }
    }
}

#[test]
fn frame_matches_tableau_for_single_injections() {
    use mccd_core::circuit::Injection;
    use mccd_core::sim::{frame_inject, tableau_run_injected, Pauli};
    let layout = build_layout(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = sample_mirror(CircuitType::II, 2, 4, &mut rng).unwrap();
    let (phys, map) = compile_with(&c, &layout, &NoiseModel::neutral_atom(), &CompileOptions::default()).unwrap();
    let reference = tableau_run(&phys, 77);
    let mut cases = 0;
    for (idx, op) in phys.ops.iter().enumerate() {
        if !op.is_noise_site() { continue; }
        for q in op.qubits() {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let inj = [Injection { after_op: idx, qubit: q, pauli: p }];
                let frame = frame_inject(&phys, &inj);
                let noisy = tableau_run_injected(&phys, 77, &inj);
                let mut diff = noisy.outcomes.clone();
                diff.xor_assign(&reference.outcomes);
                assert_eq!(parities(&map, &frame.meas_flips), parities(&map, &diff));
                cases += 1;
            }
        }
    }
    assert!(cases > 100);
}
