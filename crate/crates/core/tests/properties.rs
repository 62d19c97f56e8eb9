//! Property tests for the invariants the engine relies on.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pricewars::dynamics::{run, segment_rounds, RunConfig, Scheduler};
use pricewars::equilibrium::{enumerate_pure_nash, find_witness, is_pure_nash, NashOptions};
use pricewars::oracle::{oracle_best_response, oracle_optimal_bundle};
use pricewars::response::monopolist_quantity;
use pricewars::scenarios::{random_profile, sample_random_instance, InstanceKind, SizeCaps};
use pricewars::{bayes_update, buyer_utility, demand, MarketInstance, Money, PriceProfile, Valuation};

fn marginals(max_len: usize, max_value: u64) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0..=max_value, 1..=max_len).prop_map(|mut v| {
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    })
}

/// A homogeneous instance with ε = 1 and a random profile on its grid.
fn homogeneous_with_profile() -> impl Strategy<Value = (MarketInstance, PriceProfile)> {
    (prop::collection::vec(1usize..=3, 1..=3), any::<u64>()).prop_flat_map(|(supplies, seed)| {
        let n: usize = supplies.iter().sum();
        marginals(n, 12).prop_filter_map("valuation covers supply", move |m| {
            (m.len() == n).then(|| {
                let market = MarketInstance::homogeneous(1, &supplies, Valuation::from_units(&m));
                let p = random_profile(&market, &mut ChaCha8Rng::seed_from_u64(seed));
                (market, p)
            })
        })
    })
}

fn small_caps() -> SizeCaps {
    SizeCaps {
        min_sellers: 1,
        max_sellers: 3,
        max_supply: 3,
        max_total: 6,
        min_value: 0,
        max_value: 8,
        max_support: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prefix_sums_and_concavity(m in marginals(10, 50)) {
        let v = Valuation::from_units(&m);
        for q in 1..=v.len() {
            prop_assert_eq!(v.value_at(q).unwrap() - v.value_at(q - 1).unwrap(), v.marginal(q));
        }
        for q in 1..v.len() {
            let up = v.value_at(q + 1).unwrap() - v.value_at(q).unwrap();
            let down = v.value_at(q).unwrap() - v.value_at(q - 1).unwrap();
            prop_assert!(up <= down);
        }
    }

    #[test]
    fn canonical_form_is_idempotent_and_outcome_invariant(
        (m, p) in homogeneous_with_profile(),
        shuffle_seed in any::<u64>(),
    ) {
        let once = p.canonical(&m);
        prop_assert_eq!(once.canonical(&m), once.clone());
        // permute each seller's prices
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        let mut rows: Vec<Vec<Money>> = p.sellers().to_vec();
        for r in rows.iter_mut() {
            use rand::seq::SliceRandom;
            r.shuffle(&mut rng);
        }
        let shuffled = PriceProfile::new(rows);
        let a = demand(&m, &p);
        let b = demand(&m, &shuffled);
        prop_assert_eq!(a.quantities(), b.quantities());
        prop_assert_eq!(a.revenues(&p), b.revenues(&shuffled));
    }

    #[test]
    fn greedy_buyer_maximizes_utility((m, p) in homogeneous_with_profile()) {
        let fast = demand(&m, &p);
        let slow = oracle_optimal_bundle(&m, &p).unwrap();
        prop_assert!(fast.same_bundle(&slow));
        prop_assert_eq!(buyer_utility(&m, &fast, &p), buyer_utility(&m, &slow, &p));
    }

    #[test]
    fn k_additive_greedy_matches_oracle(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = sample_random_instance(InstanceKind::KAdditive, seed, &small_caps());
        let p = random_profile(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        prop_assert!(demand(&m, &p).same_bundle(&oracle_optimal_bundle(&m, &p).unwrap()));
    }

    #[test]
    fn most_expensive_item_lemma((m, p) in homogeneous_with_profile(), qseed in any::<u64>()) {
        let x = demand(&m, &p);
        let sold = x.total();
        prop_assume!(sold > 0);
        let h = (0..m.seller_count())
            .flat_map(|i| x.seller(i).iter().map(move |&j| (i, j)))
            .map(|(i, j)| p.seller(i)[j])
            .max()
            .unwrap();
        let q = random_profile(&m, &mut ChaCha8Rng::seed_from_u64(qseed));
        let cheap = q.sellers().iter().flatten().filter(|&&y| y <= h).count();
        if cheap >= sold {
            prop_assert!(demand(&m, &q).total() >= sold);
        }
    }

    #[test]
    fn lowering_a_price_never_reduces_quantity(
        (m, p) in homogeneous_with_profile(),
        pick in any::<prop::sample::Index>(),
        cut in 1u64..=13,
    ) {
        let slots: Vec<(usize, usize)> = (0..m.seller_count())
            .flat_map(|i| (0..m.supply(i)).map(move |j| (i, j)))
            .collect();
        let (i, j) = slots[pick.index(slots.len())];
        let mut row = p.seller(i).to_vec();
        row[j] = row[j].saturating_sub(Money(cut));
        let lower = p.with_seller(i, row);
        prop_assert!(demand(&m, &lower).total() >= demand(&m, &p).total());
    }

    #[test]
    fn demand_is_deterministic((m, p) in homogeneous_with_profile()) {
        prop_assert_eq!(demand(&m, &p), demand(&m, &p));
    }

    #[test]
    fn uniform_response_is_globally_optimal(seed in any::<u64>(), pseed in any::<u64>()) {
        let caps = SizeCaps { max_supply: 3, max_value: 10, ..small_caps() };
        let m = sample_random_instance(InstanceKind::Homogeneous, seed, &caps);
        let p = random_profile(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        for i in 0..m.seller_count() {
            let o = oracle_best_response(&m, i, &p, None).unwrap();
            prop_assert_eq!(o.uniform_revenue, o.revenue);
        }
    }

    #[test]
    fn uninformative_maximizer_implies_uniform_one(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = sample_random_instance(InstanceKind::Uncertain, seed, &small_caps());
        let p = random_profile(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        let u = m.uncertainty.as_ref().unwrap();
        for i in 0..m.seller_count() {
            let o = oracle_best_response(&m, i, &p, Some(&u.priors[i])).unwrap();
            if o.uninformative_max {
                prop_assert!(o.uniform_uninformative_max);
            }
        }
    }

    #[test]
    fn bayes_update_keeps_truth_and_normalizes(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = sample_random_instance(InstanceKind::Uncertain, seed, &small_caps());
        let p = random_profile(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        let u = m.uncertainty.as_ref().unwrap();
        let observed = demand(&m, &p);
        for b in &u.priors {
            let post = bayes_update(b, &u.universe, &p, &observed).unwrap();
            prop_assert!(post.support_len() <= b.support_len());
            prop_assert!(post.support().any(|id| id == u.true_valuation));
            let total: num_rational::BigRational = post.entries().map(|(_, q)| q.clone()).sum();
            prop_assert_eq!(total, num_rational::BigRational::from_integer(1.into()));
        }
    }

    #[test]
    fn last_considered_mover_sells_its_monopoly_quantity(seed in any::<u64>(), pseed in any::<u64>()) {
        let caps = SizeCaps { min_sellers: 2, max_value: 12, ..small_caps() };
        let m = sample_random_instance(InstanceKind::Homogeneous, seed, &caps);
        let p = random_profile(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        let v = m.valuation().unwrap().clone();
        let n = m.total_supply();
        let t = run(&m, &Scheduler::round_robin(), &p, RunConfig::rounds(12)).unwrap();
        for s in &t.steps {
            if s.last_considered == Some(s.mover) {
                let mu = monopolist_quantity(&v, n, m.supply(s.mover));
                prop_assert_eq!(s.purchase.quantity(s.mover), mu, "step {}", s.t);
            }
        }
    }

    #[test]
    fn traces_are_deterministic(seed in any::<u64>(), sseed in any::<u64>()) {
        let m = sample_random_instance(InstanceKind::Uncertain, seed, &small_caps());
        let sched = Scheduler::random(sseed);
        let p = PriceProfile::at_cap(&m);
        let a = run(&m, &sched, &p, RunConfig::full(5)).unwrap();
        let b = run(&m, &sched, &p, RunConfig::full(5)).unwrap();
        prop_assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn rounds_partition_moves(moves in prop::collection::vec(0usize..3, 0..40)) {
        let r = segment_rounds(&moves, 3);
        let b = &r.boundaries;
        prop_assert_eq!(b[0], 0);
        prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
        for w in b.windows(2) {
            let mut seen = [false; 3];
            for &m in &moves[w[0]..w[1]] {
                seen[m] = true;
            }
            prop_assert!(seen.iter().all(|&x| x));
            // minimal: the round's last move is its only move by that seller
            let last = moves[w[1] - 1];
            prop_assert_eq!(moves[w[0]..w[1]].iter().filter(|&&m| m == last).count(), 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumerated_equilibria_have_no_deviation(seed in any::<u64>(), hetero in any::<bool>()) {
        let caps = SizeCaps { max_sellers: 2, max_supply: 2, max_total: 4, max_value: 5, ..small_caps() };
        let kind = if hetero { InstanceKind::KAdditive } else { InstanceKind::Homogeneous };
        let m = sample_random_instance(kind, seed, &caps);
        let r = enumerate_pure_nash(&m, NashOptions { witnesses: true, ..Default::default() }).unwrap();
        for p in &r.equilibria {
            prop_assert!(is_pure_nash(&m, p));
            prop_assert!(find_witness(&m, p).is_none());
        }
        for (p, w) in r.witnesses.unwrap() {
            prop_assert!(w.gain() > Money::ZERO);
            prop_assert!(w.replay(&m, &p));
        }
    }
}
