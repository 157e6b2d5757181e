mod common;

use mxdag::resource::{check_capacity, coflow_rates, max_min_fair, priority_rates};
use proptest::prelude::*;
use rand::Rng;

use common::{is_max_min, random_instance, used};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn max_min_is_feasible_and_bottlenecked(seed in any::<u64>()) {
        let (demands, caps) = random_instance(seed);
        let rates = max_min_fair(&demands, &caps);
        prop_assert!(check_capacity(&rates, &demands, &caps).is_ok());
        prop_assert!(is_max_min(&rates, &demands, &caps).is_ok(), "{:?}", is_max_min(&rates, &demands, &caps));
    }

    #[test]
    fn raising_one_rate_needs_lowering_a_smaller_one(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        // Perturbation form: increasing flow i by any amount breaks capacity
        // unless some flow with rate <= rate_i is decreased.
        let (demands, caps) = random_instance(seed);
        let rates = max_min_fair(&demands, &caps);
        let i = pick.index(demands.len());
        let mut bumped = rates.clone();
        bumped[i] += 1e-6;
        // Only flows strictly larger than rate_i may give up bandwidth.
        let u = used(&bumped, &demands, caps.len());
        let blocked = demands[i].uses.iter().any(|&(res, _)| {
            let slack_from_larger: f64 = demands
                .iter()
                .enumerate()
                .filter(|&(j, o)| j != i && rates[j] > rates[i] * (1.0 + 1e-9) && o.uses.iter().any(|&(x, _)| x == res))
                .map(|(j, _)| rates[j] - rates[i])
                .sum();
            u[res] > caps[res] * (1.0 + 1e-12) && slack_from_larger <= 1e-9
        });
        prop_assert!(blocked);
    }

    #[test]
    fn strict_priority_is_feasible_and_favours_the_first(seed in any::<u64>()) {
        let (demands, caps) = random_instance(seed);
        let rates = priority_rates(&demands, &caps);
        prop_assert!(check_capacity(&rates, &demands, &caps).is_ok());
        let alone = max_min_fair(&demands[..1], &caps)[0];
        prop_assert!((rates[0] - alone).abs() <= 1e-12 * alone.max(1.0));
    }

    #[test]
    fn coflow_members_finish_together(seed in any::<u64>()) {
        let (demands, caps) = random_instance(seed);
        let mut r = common::rng(seed ^ 0x5eed);
        let remaining: Vec<f64> = demands.iter().map(|_| r.gen_range(0.5..5.0)).collect();
        let mut order: Vec<usize> = (0..demands.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        let groups: Vec<Vec<usize>> = order.chunks(r.gen_range(1..4)).map(|c| c.to_vec()).collect();
        let rates = coflow_rates(&groups, &demands, &remaining, &caps);
        prop_assert!(check_capacity(&rates, &demands, &caps).is_ok());
        for g in &groups {
            let finish: Vec<f64> = g.iter().map(|&i| remaining[i] / rates[i]).collect();
            for f in &finish {
                prop_assert!(common::close(*f, finish[0], 1e-9), "{finish:?}");
            }
        }
    }
}
