//! Built-in benchmark instances.
//!
//! Four desk-scale instances mirror the published (gamma, alpha) patterns at
//! `gamma = 1e-2`, with atoms chosen so arm means sit in `[0.5, 1.5]` and
//! stopping times stay tractable on a laptop. One easier two-armed instance
//! exists for successive-elimination comparisons, and one instance per
//! asymptotic regime backs the weight-exponent checks.

use rarebai_core::instance::{ArmSpec, BanditInstance};

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub name: &'static str,
    pub instance: BanditInstance,
}

fn arm(alpha: f64, atoms: &[(f64, f64)], bound: f64) -> ArmSpec {
    ArmSpec::new(alpha, atoms.to_vec(), bound)
}

/// The four desk-suite instances, in publication order.
pub fn desk_suite() -> Vec<NamedInstance> {
    vec![
        NamedInstance {
            name: "t1-g1e2-a111",
            instance: BanditInstance::new(
                0.01,
                vec![
                    arm(1.0, &[(0.2, 7.5)], 0.5),
                    arm(1.0, &[(0.15, 5.0)], 0.5),
                    arm(1.0, &[(0.1, 5.0)], 0.5),
                ],
            ),
        },
        NamedInstance {
            name: "t2-g1e2-a-1-15-2",
            instance: BanditInstance::new(
                0.01,
                vec![
                    arm(1.0, &[(0.2, 7.5)], 0.5),
                    arm(1.5, &[(0.15, 5.0)], 0.5),
                    arm(2.0, &[(0.1, 5.0)], 0.5),
                ],
            ),
        },
        NamedInstance {
            name: "t3-g1e2-a11111",
            instance: BanditInstance::new(
                0.01,
                vec![
                    arm(1.0, &[(0.2, 7.5)], 0.5),
                    arm(1.0, &[(0.15, 5.0)], 0.5),
                    arm(1.0, &[(0.05, 5.0), (0.4, 1.0)], 0.5),
                    arm(1.0, &[(0.11, 5.0)], 0.5),
                    arm(1.0, &[(0.1, 5.0)], 0.5),
                ],
            ),
        },
        NamedInstance {
            name: "t4-g1e2-a-2-15-2-25-1",
            instance: BanditInstance::new(
                0.01,
                vec![
                    arm(2.0, &[(0.2, 7.5)], 0.5),
                    arm(1.5, &[(0.15, 5.0)], 0.5),
                    arm(2.0, &[(0.13, 5.0)], 0.5),
                    arm(2.5, &[(0.11, 5.0)], 0.5),
                    arm(1.0, &[(0.04, 5.0), (0.15, 2.0)], 0.5),
                ],
            ),
        },
    ]
}

/// Two-armed instance easy enough for successive elimination to finish
/// quickly while still rare-event in character.
pub fn se_instance() -> BanditInstance {
    BanditInstance::new(
        0.01,
        vec![arm(1.0, &[(0.2, 7.5)], 0.5), arm(1.0, &[(0.1, 5.0)], 0.5)],
    )
}

/// One instance per asymptotic regime, tuned so the weight exponents are
/// visible over a desk-scale rarity sweep.
pub fn regime_suite() -> Vec<NamedInstance> {
    let single = |alpha: f64, mu: f64| arm(alpha, &[(mu / 4.0, 4.0)], 0.5);
    vec![
        NamedInstance {
            name: "regime1",
            instance: BanditInstance::new(
                0.01,
                vec![single(1.0, 1.2), single(2.0, 0.5), single(3.0, 1.0)],
            ),
        },
        NamedInstance {
            name: "regime2",
            instance: BanditInstance::new(
                0.01,
                vec![single(3.0, 1.2), single(1.0, 0.9), single(2.0, 0.6)],
            ),
        },
        NamedInstance {
            name: "regime3",
            instance: BanditInstance::new(
                0.01,
                vec![single(3.0, 1.2), single(3.0, 0.9), single(1.0, 0.6)],
            ),
        },
        NamedInstance {
            name: "regime4",
            instance: BanditInstance::new(
                0.01,
                vec![single(3.0, 1.2), single(1.0, 0.9), single(3.0, 0.85)],
            ),
        },
        NamedInstance {
            name: "regime5",
            instance: BanditInstance::new(
                0.01,
                vec![single(3.0, 1.2), single(1.0, 0.9), single(3.0, 0.15)],
            ),
        },
    ]
}

/// Look an instance up by name across all built-in sets.
pub fn by_name(name: &str) -> Option<BanditInstance> {
    desk_suite()
        .into_iter()
        .chain(regime_suite())
        .find(|n| n.name == name)
        .map(|n| n.instance)
        .or_else(|| (name == "se").then(se_instance))
}
