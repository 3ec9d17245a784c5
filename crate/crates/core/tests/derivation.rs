use std::sync::Arc;

use lipfree::derivation::{
    average_lift, distance_function, in_neighborhood, midpoint_lift, play, pole_molecule,
    prover_certify, prover_escape, relative_derivation_oracle, transcript_survives,
    verify_transcript, Adversary, AdversaryConfig, AdversaryKind, Leaf, PoleMolecule, Strategy,
    Violation, WeakNeighborhood,
};
use lipfree::diamond::{Diamond, DiamondSpec, Side};
use lipfree::freespace::{molecule, norm, pair, push_to_copy, FreeVector};
use lipfree::lipschitz::{glue_poles, LipschitzFunction};
use lipfree::rational::{half, int, rat};
use lipfree::Error;

fn diamond(k: u64, n: usize) -> Arc<Diamond> {
    Diamond::build(&DiamondSpec::finite(k, n).unwrap()).unwrap()
}

fn config(kind: AdversaryKind, seed: u64) -> AdversaryConfig {
    AdversaryConfig::new(kind, 3, rat(1, 20), seed).unwrap()
}

#[test]
fn depth_zero_is_a_single_node() {
    let d = diamond(1, 3);
    let t = prover_certify(&d, 0, &config(AdversaryKind::DistanceFunctions, 1), &int(1)).unwrap();
    assert_eq!(t.root.node_count(), 1);
    assert!(verify_transcript(&d.space, &t).passed());
    assert!(transcript_survives(&d.space, &t).unwrap());
}

#[test]
fn depth_one_separations_are_exactly_one() {
    let d = diamond(1, 8);
    for kind in AdversaryKind::ALL {
        let t = prover_certify(&d, 1, &config(kind, 4), &int(1)).unwrap();
        assert!(verify_transcript(&d.space, &t).passed());
        for m in &t.root.moves {
            assert_eq!(norm(&d.space, &(&m.response - &t.root.target)).unwrap(), int(1));
        }
    }
}

#[test]
fn certify_verify_and_survive_on_small_spaces() {
    for (k, n) in [(1u64, 8usize), (2, 4), (3, 3)] {
        let d = diamond(k, n);
        for kind in AdversaryKind::ALL {
            let t = prover_certify(&d, k as usize, &config(kind, 2), &int(1)).unwrap();
            let report = verify_transcript(&d.space, &t);
            assert!(report.passed(), "{kind} on D_{k}[{n}]: {:?}", report.failures().next());
            assert!(transcript_survives(&d.space, &t).unwrap(), "{kind} on D_{k}[{n}]");
        }
    }
}

#[test]
fn depth_two_on_d2_4_against_distance_functions() {
    let d = diamond(2, 4);
    let cfg = AdversaryConfig::new(AdversaryKind::DistanceFunctions, 3, rat(1, 20), 11).unwrap();
    let t = prover_certify(&d, 2, &cfg, &int(1)).unwrap();
    assert_eq!(t.root.depth, 2);
    assert!(verify_transcript(&d.space, &t).passed());
    assert!(transcript_survives(&d.space, &t).unwrap());
}

#[test]
fn neighborhood_membership_edge_cases() {
    let d = diamond(1, 4);
    let c = pole_molecule(&d);
    let fs = vec![distance_function(&d.space, d.top()), distance_function(&d.space, d.mid(3).unwrap())];
    let tight = WeakNeighborhood::new(fs.clone(), c.clone(), rat(1, 100)).unwrap();
    assert!(in_neighborhood(&d.space, &tight, &c).unwrap());
    // every pairing of a unit-ball vector with these functionals is at most 2 * 2
    let loose = WeakNeighborhood::new(fs, c.clone(), int(100)).unwrap();
    for x in 0..d.len() {
        for y in 0..d.len() {
            if x != y {
                let m = molecule(&d.space, x, y).unwrap();
                assert!(in_neighborhood(&d.space, &loose, &m).unwrap());
            }
        }
    }
    assert!(WeakNeighborhood::new(vec![], c.clone(), int(1)).is_err());
    assert!(WeakNeighborhood::new(vec![LipschitzFunction::zero(d.len())], c, int(0)).is_err());
}

#[test]
fn escape_on_d1_8_is_always_exact() {
    let d = diamond(1, 8);
    let pole = pole_molecule(&d);
    for kind in AdversaryKind::ALL {
        for seed in 0..10 {
            let adv = Adversary::new(&config(kind, seed), d.clone()).unwrap();
            let nb = adv.pose("root", 1, &pole, &[]).unwrap();
            let e = prover_escape(&d, &nb).unwrap();
            assert!(2 <= e.i && e.i < e.j && e.j <= 8);
            assert!(in_neighborhood(&d.space, &nb, &e.vector).unwrap());
            assert_eq!(norm(&d.space, &(&e.vector - &pole)).unwrap(), int(1));
        }
    }
}

#[test]
fn average_of_depth_zero_halves_is_in_the_ball() {
    let d = diamond(2, 3);
    let pred = d.predecessor().unwrap().clone();
    let m = pole_molecule(&pred);
    let leaf = |v: &FreeVector| -> Arc<dyn Strategy> { Arc::new(Leaf::new(pred.clone(), v.clone(), int(1))) };
    let avg = average_lift(d.clone(), 3, leaf(&m), 2, leaf(&m)).unwrap();
    assert_eq!(avg.depth(), 0);
    assert!(norm(&d.space, avg.target()).unwrap() <= int(1));
}

#[test]
fn average_at_depth_one_separates_by_one_and_matches_glued_certificate() {
    let d = diamond(2, 3);
    let pred = d.predecessor().unwrap().clone();
    let half_cert = || -> Arc<dyn Strategy> { Arc::new(PoleMolecule::new(pred.clone(), 1, int(1)).unwrap()) };
    let avg = average_lift(d.clone(), 3, half_cert(), 2, half_cert()).unwrap();
    for seed in 1..=3 {
        let adv = Adversary::new(&config(AdversaryKind::RandomLipschitz, seed), d.clone()).unwrap();
        let nb = adv.pose("root/0r", 1, avg.target(), &[]).unwrap();
        let reply = avg.respond(&nb).unwrap();
        assert!(in_neighborhood(&d.space, &nb, &reply.response).unwrap());
        let diff = &reply.response - avg.target();
        let sep = norm(&d.space, &diff).unwrap();
        assert!(sep >= int(1));

        // The two halves of the difference live in the copies (3, +) and
        // (2, -); gluing their pulled-back certificates norms the average.
        let halves: Vec<(Side, usize)> = vec![(Side::Plus, 3), (Side::Minus, 2)];
        let mut parts = Vec::new();
        for (side, b) in &halves {
            let inv = d.subcopy_inverse(*side, *b).unwrap();
            let w = FreeVector::from_entries(
                diff.balanced(d.base()).iter().filter_map(|(x, a)| inv[x].map(|u| (u, a.clone()))),
            );
            let w = w.balanced(pred.base());
            let (_, cert) = lipfree::freespace::free_norm(&pred.space, &w).unwrap();
            let f = lipfree::lipschitz::copy_function(&d, *side, *b, &cert.potential).unwrap();
            parts.push((push_to_copy(&d, *side, *b, &w).unwrap(), f));
        }
        let glued = glue_poles(&d, 3, &parts[0].1, 2, &parts[1].1).unwrap();
        let gamma = (&parts[0].0 + &parts[1].0).scale(&half());
        assert!(gamma.same_element(&diff, d.base()));
        assert_eq!(pair(&glued, &gamma.balanced(d.base())).unwrap(), sep);
    }
}

#[test]
fn average_rejects_bad_inputs() {
    let d = diamond(3, 3);
    let pred = d.predecessor().unwrap().clone();
    let at = |k: usize| -> Arc<dyn Strategy> { Arc::new(PoleMolecule::new(pred.clone(), k, int(1)).unwrap()) };
    assert!(matches!(average_lift(d.clone(), 2, at(1), 3, at(2)), Err(Error::DepthMismatch(_))));
    assert_eq!(average_lift(d.clone(), 2, at(1), 2, at(1)).err(), Some(Error::SameBranch(2)));
    assert!(matches!(average_lift(d.clone(), 1, at(1), 2, at(1)), Err(Error::BranchIndex { .. })));
    let foreign: Arc<dyn Strategy> = Arc::new(PoleMolecule::new(d.clone(), 1, int(1)).unwrap());
    assert!(matches!(average_lift(d.clone(), 2, foreign, 3, at(1)), Err(Error::MismatchedSpaces(_))));
    let one = diamond(1, 3);
    assert!(matches!(
        average_lift(one.clone(), 2, at(1), 3, at(1)),
        Err(Error::NotSuccessor(_))
    ));
}

fn certified(d: &Arc<Diamond>, k: usize) -> Arc<dyn Strategy> {
    Arc::new(PoleMolecule::new(d.clone(), k, int(1)).unwrap())
}

#[test]
fn midpoint_with_negated_target_certifies_zero() {
    for (kk, n, k) in [(1u64, 8usize, 1usize), (2, 4, 2), (2, 3, 1)] {
        let d = diamond(kk, n);
        let inner = certified(&d, k);
        let neg = -inner.target();
        let lifted = midpoint_lift(inner, neg).unwrap();
        assert!(lifted.target().is_zero());
        assert_eq!(lifted.epsilon(), &half());
        let adv = Adversary::new(&config(AdversaryKind::AdaptiveDual, 3), d.clone()).unwrap();
        let t = play(lifted, &adv).unwrap();
        assert!(verify_transcript(&d.space, &t).passed());
        assert!(transcript_survives(&d.space, &t).unwrap());
    }
}

#[test]
fn midpoint_with_same_target_weakens_epsilon() {
    let d = diamond(2, 4);
    let inner = certified(&d, 2);
    let same = inner.target().clone();
    let lifted = midpoint_lift(inner.clone(), same).unwrap();
    assert!(lifted.target().same_element(inner.target(), d.base()));
    let adv = Adversary::new(&config(AdversaryKind::RandomLipschitz, 5), d.clone()).unwrap();
    assert!(verify_transcript(&d.space, &play(lifted, &adv).unwrap()).passed());
    let zero_depth = midpoint_lift(certified(&d, 0), FreeVector::delta(d.top())).unwrap();
    let t = play(zero_depth, &adv).unwrap();
    assert_eq!(t.root.node_count(), 1);
    assert!(verify_transcript(&d.space, &t).passed());
}

#[test]
fn midpoint_rejects_large_y() {
    let d = diamond(1, 3);
    let y = FreeVector::delta(d.bottom()); // norm d(bottom, base) = 1
    assert!(midpoint_lift(certified(&d, 1), y.scale(&int(1))).is_ok());
    assert!(matches!(
        midpoint_lift(certified(&d, 1), y.scale(&int(2))),
        Err(Error::NormTooLarge(_))
    ));
}

#[test]
fn planted_defects_are_located() {
    let d = diamond(2, 4);
    let t = prover_certify(&d, 2, &config(AdversaryKind::DistanceFunctions, 1), &int(1)).unwrap();

    let mut inflated = t.clone();
    inflated.root.moves[0].response = inflated.root.moves[0].response.scale(&int(3));
    inflated.root.moves[0].response_subtree.target = inflated.root.moves[0].response.clone();
    let report = verify_transcript(&d.space, &inflated);
    let root = report.node("root").unwrap();
    assert!(root.violations.iter().any(|v| matches!(v, Violation::UnitBall { what: "response", .. })));
    assert_eq!(root.violations.iter().find(|v| matches!(v, Violation::UnitBall { .. })).unwrap().condition(), "unit ball");

    let mut outside = t.clone();
    let shift = FreeVector::delta(d.top()).scale(&rat(1, 2));
    let node = &mut outside.root.moves[1].target_subtree;
    let moved = &node.moves[0].response + &shift;
    node.moves[0].response = moved.clone();
    node.moves[0].response_subtree.target = moved;
    let report = verify_transcript(&d.space, &outside);
    assert!(!report.passed());
    let bad = report.node("root/1t").unwrap();
    assert!(bad.violations.iter().any(|v| v.condition() == "neighborhood"));
    assert!(report.node("root").unwrap().passed());
}

#[test]
fn oracle_degenerate_cases() {
    let d = diamond(1, 3);
    let a = molecule(&d.space, d.top(), d.bottom()).unwrap();
    let b = molecule(&d.space, d.top(), d.mid(2).unwrap()).unwrap();
    // no functionals: the box is everything
    let both = vec![a.clone(), b.clone()];
    let diam = norm(&d.space, &(&a - &b)).unwrap();
    let alive = relative_derivation_oracle(&d.space, &both, &[], &int(1), &diam, 1).unwrap();
    assert_eq!(alive.len(), 2);
    let above = &diam + rat(1, 1000);
    assert!(relative_derivation_oracle(&d.space, &both, &[], &int(1), &above, 1).unwrap().is_empty());
    assert!(relative_derivation_oracle(&d.space, &[a], &[], &int(1), &rat(1, 2), 1).unwrap().is_empty());
}

#[test]
fn oracle_is_monotone_in_rounds() {
    let d = diamond(2, 3);
    let t = prover_certify(&d, 2, &config(AdversaryKind::RandomLipschitz, 8), &int(1)).unwrap();
    let vs = t.vectors();
    let (fam, eta) = t.universal_families().into_iter().next().unwrap();
    let mut prev = vs.len() + 1;
    for k in 0..4 {
        let alive = relative_derivation_oracle(&d.space, &vs, &fam, &eta, &int(1), k).unwrap();
        assert!(alive.len() <= prev);
        prev = alive.len();
    }
}

#[test]
fn identical_seeds_give_identical_transcripts() {
    let d = diamond(2, 4);
    for kind in AdversaryKind::ALL {
        let a = prover_certify(&d, 2, &config(kind, 42), &int(1)).unwrap();
        let b = prover_certify(&d, 2, &config(kind, 42), &int(1)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn success_persists_with_more_branches() {
    for (k, n) in [(1u64, 3usize), (1, 8), (2, 3), (2, 4), (3, 3)] {
        for kind in AdversaryKind::ALL {
            for seed in [1, 2] {
                let cfg = config(kind, seed);
                let small = prover_certify(&diamond(k, n), k as usize, &cfg, &int(1));
                if small.is_ok() {
                    let d = diamond(k, n + 1);
                    let big = prover_certify(&d, k as usize, &cfg, &int(1)).unwrap();
                    assert!(verify_transcript(&d.space, &big).passed());
                }
            }
        }
    }
}

#[test]
fn two_branches_report_insufficient_branching() {
    let d = diamond(1, 2);
    let err = prover_certify(&d, 1, &config(AdversaryKind::DistanceFunctions, 1), &int(1)).unwrap_err();
    assert!(matches!(err, Error::InsufficientBranching { retry_with: 3, .. }));
}

#[test]
fn depth_beyond_the_space_is_rejected() {
    let d = diamond(2, 3);
    assert!(matches!(
        prover_certify(&d, 3, &config(AdversaryKind::DistanceFunctions, 1), &int(1)),
        Err(Error::DepthMismatch(_))
    ));
    assert!(prover_certify(&d, 1, &config(AdversaryKind::DistanceFunctions, 1), &int(2)).is_err());
}
