use rarebai::suite;
use rarebai_core::approx::{solve_approx_maxmin, ApproxCascade};
use rarebai_core::exact::SolveTolerances;
use rarebai_core::instance::{ArmSpec, BanditInstance};

fn main() {
    let tol = SolveTolerances::default();
    for named in suite::regime_suite().into_iter().filter(|n| n.name == "regime4" || n.name == "regime5") {
        let z = ApproxCascade::new(&named.instance).unwrap().zeta().unwrap();
        println!("== {} (zeta {z:.3e}) ==", named.name);
        for gamma in [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005] {
            let inst = BanditInstance::new(gamma, named.instance.arms.clone());
            match solve_approx_maxmin(&inst, &tol) {
                Ok(sol) => println!("  gamma {gamma:8.4} w = {:?}", sol.weights.iter().map(|w| format!("{w:.4e}")).collect::<Vec<_>>()),
                Err(e) => println!("  gamma {gamma:8.4} ERR {e}"),
            }
        }
    }
    // extra candidates for regimes 4/5 with milder alpha gap
    let single = |alpha: f64, mu: f64| ArmSpec::new(alpha, vec![(mu / 4.0, 4.0)], 0.5);
    let cands = vec![
        ("r4-a212-close", vec![single(2.0, 1.2), single(1.0, 0.9), single(2.0, 0.85)]),
        ("r5-a212-far", vec![single(2.0, 1.2), single(1.0, 0.9), single(2.0, 0.15)]),
    ];
    for (name, arms) in cands {
        let inst0 = BanditInstance::new(0.01, arms.clone());
        let z = ApproxCascade::new(&inst0).unwrap().zeta().unwrap();
        println!("== {name} (zeta {z:.3e}) ==");
        for gamma in [0.05, 0.02, 0.01, 0.005, 0.002, 0.001] {
            let inst = BanditInstance::new(gamma, arms.clone());
            match solve_approx_maxmin(&inst, &tol) {
                Ok(sol) => println!("  gamma {gamma:8.4} w = {:?}", sol.weights.iter().map(|w| format!("{w:.4e}")).collect::<Vec<_>>()),
                Err(e) => println!("  gamma {gamma:8.4} ERR {e}"),
            }
        }
    }
}
