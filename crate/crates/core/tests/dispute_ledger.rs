use gpos_core::geodata::Coordinates;
use gpos_core::reconfig::{
    Candidate, CollateralRule, DisputeStatus, Eligibility, Ledger, ReconfigError, ReconfigParams, Verdict,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Open { challenger: usize, accused: usize, rate: f64, minimum: u64 },
    Resolve { dispute: usize, upheld: bool, reward: f64 },
    Reconfigure { lambda: f64, top: usize },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0usize..12, 0usize..12, 0.0f64..0.5, 0u64..50).prop_map(|(challenger, accused, rate, minimum)| Op::Open {
            challenger,
            accused,
            rate,
            minimum
        }),
        3 => (0usize..40, any::<bool>(), 0.0f64..=1.0).prop_map(|(dispute, upheld, reward)| Op::Resolve {
            dispute,
            upheld,
            reward
        }),
        1 => (0.0f64..=1.0, 1usize..12).prop_map(|(lambda, top)| Op::Reconfigure { lambda, top }),
    ]
}

fn candidates(stakes: &[u64]) -> Vec<Candidate> {
    stakes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let lat = -60.0 + 11.0 * i as f64;
            let lon = -170.0 + 29.0 * i as f64;
            Candidate::new(format!("v{i:02}"), Coordinates::new(lat, lon).unwrap(), s)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conservation_and_replay_under_random_ops(
        stakes in proptest::collection::vec(1u64..1_000_000, 12),
        ops in proptest::collection::vec(op(), 1..80),
    ) {
        let params = ReconfigParams::new(0.5, Eligibility::MinStake(1));
        let (mut ledger, _) = Ledger::genesis(candidates(&stakes), params).unwrap();
        let initial = ledger.initial_total();
        for op in ops {
            match op {
                Op::Open { challenger, accused, rate, minimum } => {
                    let c = format!("v{challenger:02}");
                    let a = format!("v{accused:02}");
                    let _ = ledger.open_dispute(&c, &a, "evidence", CollateralRule { rate, minimum });
                }
                Op::Resolve { dispute, upheld, reward } => {
                    let verdict = if upheld { Verdict::InvalidLocation } else { Verdict::ValidLocation };
                    let was_open = ledger.dispute(dispute as u64).map(|d| d.status == DisputeStatus::Open);
                    match ledger.resolve_dispute(dispute as u64, verdict, reward) {
                        Ok(_) => prop_assert_eq!(was_open, Some(true)),
                        Err(ReconfigError::AlreadyResolved(_)) => prop_assert_eq!(was_open, Some(false)),
                        Err(ReconfigError::UnknownDispute(_)) => prop_assert_eq!(was_open, None),
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                }
                Op::Reconfigure { lambda, top } => {
                    match ledger.reconfigure(ReconfigParams::new(lambda, Eligibility::TopK(top))) {
                        Ok(_) | Err(ReconfigError::EmptyEligibleSet) => {}
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                }
            }
            prop_assert!(ledger.is_conserved());
            prop_assert_eq!(ledger.initial_total(), initial);
            prop_assert!(ledger.state().verify_commit());
        }
        let replayed = Ledger::replay(&ledger.event_log()).unwrap();
        prop_assert_eq!(&replayed, &ledger);
    }
}
