use admarket::verify::{self, TestGrid};

#[test]
fn ordering_suite_fails_with_a_sign_flipped_bidding_foc() {
    let g = TestGrid::quick();
    let markets = verify::solve_markets(&g.lambdas, &g.js, &g.families).unwrap();
    let honest = verify::ordering_suite(&markets, None).unwrap();
    assert!(honest.iter().all(|c| c.passed), "{honest:#?}");
    let broken =
        verify::ordering_suite(&markets, Some(verify::sign_flipped_bidding_price)).unwrap();
    let failed: Vec<_> = broken.iter().filter(|c| !c.passed).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().any(|c| c.name.contains("p_B")), "{failed:#?}");
}
