use num_complex::Complex64;
use proptest::prelude::*;

use stccpm::cpm::{index_to_symbol, phase_distance, wrap_unit};
use stccpm::stc::{antenna_stream, gram_matrix, map_data, verify_code, xi_value, DataWindow};
use stccpm::{CorrectionFamily, CpmParams, Encoder, MappingScheme, ModIndex, PulseShape, Scheme, StCode};

const FAMILIES: [(usize, CorrectionFamily); 6] = [
    (2, CorrectionFamily::WangXia),
    (2, CorrectionFamily::Pc2Generic),
    (3, CorrectionFamily::LinPc),
    (3, CorrectionFamily::RcPc),
    (2, CorrectionFamily::OffPc),
    (3, CorrectionFamily::OffPc),
];

fn arb_params() -> impl Strategy<Value = CpmParams> {
    (
        prop::sample::select(vec![(1u32, 2u32), (1, 4), (2, 3)]),
        prop::sample::select(vec![2u32, 4, 8]),
        1u32..=3,
        prop::sample::select(vec![PulseShape::Rec, PulseShape::Rc]),
    )
        .prop_map(|(h, m, gamma, pulse)| {
            CpmParams::new(ModIndex::from_fraction(h.0, h.1).unwrap(), m, gamma, pulse)
                .unwrap()
                .with_oversampling(32)
                .unwrap()
        })
}

fn symbols(raw: &[u32], m: u32) -> Vec<i32> {
    raw.iter().map(|&k| index_to_symbol(k % m, m)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_family_is_orthogonal_for_any_data_and_initial_phase(
        params in arb_params(),
        family in prop::sample::select(FAMILIES.to_vec()),
        raw in prop::collection::vec(0u32..8, 12),
        theta in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let (lt, fam) = family;
        let code = StCode::family(lt, fam).unwrap().with_theta0(theta[..lt].to_vec()).unwrap();
        let d = symbols(&raw[..lt * 4], params.m);
        let blocks = Encoder::new(&Scheme::Coded(code), &params).encode_stream(&d).unwrap();
        for block in &blocks {
            let g = gram_matrix(block);
            for m in 0..lt {
                prop_assert!((g[m][m].re / params.es - 1.0).abs() < 1e-6);
                for mp in 0..lt {
                    if m != mp {
                        prop_assert!(g[m][mp].norm() / params.es < 1e-6, "{:?} {}", fam, g[m][mp].norm());
                    }
                }
            }
        }
    }

    #[test]
    fn phase_is_continuous_across_blocks(
        params in arb_params(),
        family in prop::sample::select(FAMILIES.to_vec()),
        raw in prop::collection::vec(0u32..8, 15),
    ) {
        let (lt, fam) = family;
        let code = StCode::family(lt, fam).unwrap();
        let d = symbols(&raw[..lt * 5], params.m);
        let blocks = Encoder::new(&Scheme::Coded(code), &params).encode_stream(&d).unwrap();
        // neighbouring blocks repeat the boundary sample
        for pair in blocks.windows(2) {
            for m in 0..lt {
                let a = pair[0].waveforms[m].samples.last().unwrap();
                let b = pair[1].waveforms[m].samples[0];
                prop_assert!((a - b).norm() < 1e-9);
            }
        }
        // and inside a stream the per-sample phase step stays small
        let max_step = 0.5 * params.h.value() * (params.m - 1) as f64 / params.oversampling as f64 * 4.0 + 0.05;
        for m in 0..lt {
            let s = antenna_stream(&blocks, m);
            for w in s.windows(2) {
                let step = phase_distance((w[1] / w[0]).arg() / (2.0 * std::f64::consts::PI), 0.0).abs();
                prop_assert!(step < max_step, "step {step}");
            }
        }
    }

    #[test]
    fn two_antenna_xi_condition(
        params in arb_params(),
        fam in prop::sample::select(vec![CorrectionFamily::WangXia, CorrectionFamily::Pc2Generic, CorrectionFamily::OffPc]),
        raw in prop::collection::vec(0u32..8, 6),
    ) {
        let code = StCode::family(2, fam).unwrap();
        let d = symbols(&raw, params.m);
        let w = DataWindow::from_stream(&d, 1, 2, params.gamma).unwrap();
        let diff = xi_value(&code, &params, 0, 0, &w).unwrap() - xi_value(&code, &params, 1, 0, &w).unwrap();
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * diff);
        prop_assert!((z + 1.0).norm() < 1e-9);
    }

    #[test]
    fn full_rate_mapping(
        raw in prop::collection::vec(0u32..4, 12),
        gamma in 1u32..=3,
        l in 0usize..4,
    ) {
        let d = symbols(&raw, 4);
        let sm = map_data(MappingScheme::Parallel, &d, l, 3, gamma).unwrap();
        for r in 0..3 {
            // lag 0 of slot r is the block's r-th fresh symbol
            prop_assert_eq!(sm[0][r][0], d[3 * l + r]);
            prop_assert_eq!(&sm[0][r], &sm[1][r]);
            prop_assert_eq!(&sm[1][r], &sm[2][r]);
        }
    }
}

#[test]
fn wang_xia_coincides_with_the_two_antenna_offset_code() {
    for gamma in 1..=3 {
        for pulse in [PulseShape::Rec, PulseShape::Rc] {
            let params = CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 8, gamma, pulse).unwrap();
            let d: Vec<i32> = (0..40).map(|k| index_to_symbol((k * 5 + 3) % 8, 8)).collect();
            let wx = Encoder::new(&StCode::family(2, CorrectionFamily::WangXia).unwrap().into(), &params).encode_stream(&d).unwrap();
            let off = Encoder::new(&StCode::family(2, CorrectionFamily::OffPc).unwrap().into(), &params).encode_stream(&d).unwrap();
            for m in 0..2 {
                for (a, b) in antenna_stream(&wx, m).iter().zip(&antenna_stream(&off, m)) {
                    assert!((a - b).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn three_antenna_pairs_hit_a_third_of_a_cycle() {
    let params = CpmParams::new(ModIndex::from_fraction(2, 3).unwrap(), 4, 2, PulseShape::Rc).unwrap();
    let d: Vec<i32> = (0..12).map(|k| index_to_symbol(k % 4, 4)).collect();
    for fam in [CorrectionFamily::LinPc, CorrectionFamily::RcPc, CorrectionFamily::OffPc] {
        let code = StCode::family(3, fam).unwrap();
        for l in 0..3 {
            let w = DataWindow::from_stream(&d, l, 3, 2).unwrap();
            for r in 0..3 {
                let xi: Vec<f64> = (0..3).map(|m| xi_value(&code, &params, m, r, &w).unwrap()).collect();
                for m in 0..3 {
                    for mp in 0..3 {
                        if m == mp {
                            continue;
                        }
                        let a = wrap_unit(xi[m] - xi[mp]);
                        assert!((a - 1.0 / 3.0).abs() < 1e-9 || (a - 2.0 / 3.0).abs() < 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn verification_is_deterministic_and_catches_the_corrupted_family() {
    let params = CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 8, 2, PulseShape::Rec).unwrap();
    let pc2 = StCode::family(2, CorrectionFamily::Pc2Generic).unwrap();
    let a = verify_code(&pc2, &params, 20, 9).unwrap();
    assert_eq!(a, verify_code(&pc2, &params, 20, 9).unwrap());
    assert!(a.orthogonal(1e-6) && a.continuous(1e-9));
    let bad = StCode::family(2, CorrectionFamily::Corrupted).unwrap();
    let r = verify_code(&bad, &params, 20, 9).unwrap();
    assert!(!r.orthogonal(1e-6));
}
