use pfsim::interfaces::{augment, extract_all, fk_region, potts_region, theta_shift, verify_ordering, InterfaceLabel};
use pfsim::lattice::{BoundaryCondition, DomainKind, ModelParams, System, BLUE, RED};
use pfsim::potts_sampler::{Algorithm, ChainState, SpinConfig};
use pfsim::rates::pillar_identity;
use pfsim::rc_coupling::EdgeConfig;
use pfsim::walls::{outermost_walls, decompose_walls, wall_sample};

#[test]
fn coupled_samples_satisfy_ordering_and_wall_identities() {
    let sys = System::build(DomainKind::FloorBox, 6, 6, BoundaryCondition::Floor).unwrap();
    let d = sys.domain().clone();
    let params = ModelParams::new(2, 1.2).unwrap();
    let mut chain = ChainState::new(SpinConfig::uniform(sys.clone(), RED), 17);
    chain.run(Algorithm::Alternating, &params, 50);
    let mut shifted = 0;
    for id in 0..400 {
        chain.step(Algorithm::Alternating, &params);
        let omega = chain.coupled_edges(&params);
        let all = extract_all(&chain.config, &omega).unwrap();
        assert!(verify_ordering(&all.top, &all.red, &all.blue, &all.bot).unwrap(), "sample {id}");
        assert!(all.top.is_subset(&all.full) && all.bot.is_subset(&all.full), "sample {id}");

        let w = wall_sample(id, &all.full, &all.blue, 0).unwrap();
        assert!(w.identity_holds, "sample {id}: {w:?}");
        let (walls, _) = decompose_walls(&all.full).unwrap();
        let outer_area: usize = outermost_walls(&walls).iter().map(|&i| walls[i].hull_area()).sum();
        assert!(outer_area <= 36);

        for region in [potts_region(&chain.config, BLUE), fk_region(&omega, InterfaceLabel::Top).unwrap()] {
            let once = augment(&d, &region);
            assert_eq!(augment(&d, &once).members(), once.members());
        }

        if let (Ok(two), Ok(one)) = (theta_shift(&all.top, 2, &d), theta_shift(&all.top, 1, &d)) {
            let twice = theta_shift(&one, 1, &d).unwrap();
            assert_eq!(two.edges(), twice.edges());
            assert_eq!(two.len(), all.top.len() + 8 * 6);
            shifted += 1;
        }
    }
    assert!(shifted > 0);
}

#[test]
fn mismatched_pair_violates_ordering() {
    let sys = System::build(DomainKind::FloorBox, 2, 2, BoundaryCondition::Floor).unwrap();
    let d = sys.domain();
    let sigma = SpinConfig::uniform(sys.clone(), RED);
    let mut omega = EdgeConfig::all_closed(sys.clone());
    let o = d.interior_index(d.foot_lo(), d.foot_lo(), 0).unwrap();
    let below = d.site(o).step(pfsim::lattice::Axis::Z, -1);
    omega.set(d.edge_between(d.site(o), below).unwrap().unwrap(), true);
    let all = extract_all(&sigma, &omega).unwrap();
    assert!(!verify_ordering(&all.top, &all.red, &all.blue, &all.bot).unwrap());
}

#[test]
fn pillar_heights_match_red_interface_on_samples() {
    let sys = System::build(DomainKind::SlabBox, 6, 4, BoundaryCondition::dobrushin()).unwrap();
    let params = ModelParams::new(2, 1.0).unwrap();
    let mut chain = ChainState::new(SpinConfig::flat(sys.clone(), 0), 4);
    chain.run(Algorithm::Alternating, &params, 30);
    for _ in 0..300 {
        chain.step(Algorithm::Alternating, &params);
        let (pillar, red) = pillar_identity(&chain.config).unwrap();
        assert_eq!(pillar, red);
    }
}
