use rarebai_core::approx::solve_approx_maxmin;
use rarebai_core::exact::SolveTolerances;
use rarebai_core::instance::{ArmSpec, BanditInstance};

fn slopes(arms: &[ArmSpec], gammas: &[f64]) -> Vec<f64> {
    let tol = SolveTolerances::default();
    let mut logs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); arms.len()];
    for &g in gammas {
        let inst = BanditInstance::new(g, arms.to_vec());
        let sol = solve_approx_maxmin(&inst, &tol).unwrap();
        for (i, &w) in sol.weights.iter().enumerate() {
            logs[i].push((g.ln(), w.ln()));
        }
    }
    logs.iter()
        .map(|pts| {
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            (n * sxy - sx * sy) / (n * sxx - sx * sx)
        })
        .collect()
}

fn main() {
    let desk = [0.1, 0.05, 0.025, 0.0125];
    // candidates: (label, means, alphas)
    let cands: Vec<(&str, Vec<f64>, Vec<f64>)> = vec![
        ("far-mid", vec![1.2, 0.5, 1.0], vec![1.0, 1.5, 2.0]),
        ("far-mid2", vec![1.2, 0.4, 1.05], vec![1.0, 1.5, 2.0]),
        ("orig", vec![1.2, 0.9, 0.6], vec![1.0, 1.5, 2.0]),
        ("wide-a", vec![1.2, 0.5, 1.0], vec![1.0, 2.0, 3.0]),
    ];
    for (label, means, alphas) in cands {
        let arms: Vec<ArmSpec> = means
            .iter()
            .zip(&alphas)
            .map(|(&mu, &a)| ArmSpec::new(a, vec![(mu / 4.0, 4.0)], 0.5))
            .collect();
        let s = slopes(&arms, &desk);
        let amax = alphas.iter().cloned().fold(f64::MIN, f64::max);
        let pred: Vec<f64> = alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| if i == 0 { (amax - a) / 2.0 } else { amax - a })
            .collect();
        println!("{label:9} slopes {s:.3?}  predicted {pred:.3?}");
    }
}
