use potts_forge::graph::Graph;
use potts_forge::potts::{Params, ParamBounds, PottsModel};
use potts_forge::spectrum::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn k3_model() -> (PottsModel, Params) {
    let m = PottsModel::ising(Graph::complete(3).unwrap());
    let p = Params { h: vec![0.0; 3], j: vec![-1.0; 3] };
    (m, p)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (PottsModel, Params) {
    let n = rng.gen_range(2..=5);
    let all: Vec<(usize, usize)> =
        (1..=n).flat_map(|i| ((i + 1)..=n).map(move |j| (i, j))).collect();
    let mut edges: Vec<(usize, usize)> = all
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(0.6))
        .collect();
    if edges.is_empty() {
        edges.push(all[0]);
    }
    let g = Graph::new(n, &edges).unwrap();
    let p = Params {
        h: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        j: (0..edges.len()).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    };
    (PottsModel::ising(g), p)
}

// eta(beta) on the ground set is strictly decreasing, bracketed by
// N_GS log N_GS below and xi(beta) above, and eta(beta) <= N_GS log N_GS + eps
// for every beta >= beta*(eps).
#[test]
fn nll_bound_chain_on_grid() {
    let (m, p) = k3_model();
    let s = compute_spectrum(&m, &p).unwrap();
    assert!(s.delta_e > 0.0);
    let n_gs = s.n_ground();
    let floor = n_gs as f64 * (n_gs as f64).ln();
    let grid = beta_grid(1e-3, 50.0, 200).unwrap();
    let mut prev = f64::INFINITY;
    for &beta in &grid {
        let eta = nll(&s, &s.ground, beta).unwrap();
        let xi = nll_upper_bound(n_gs, s.n_excited, s.delta_e, beta).unwrap();
        // strict away from the floor; at large beta eta - floor underflows
        // below f64 resolution, hence the 1e-10 slack
        assert!(eta < prev + 1e-10, "eta not decreasing at beta={beta}");
        assert!(eta > floor - 1e-10, "eta below its floor at beta={beta}");
        assert!(eta <= xi + 1e-10, "eta {eta} exceeds xi {xi} at beta={beta}");
        prev = eta;
    }
    for eps in [0.1, 1.0] {
        let bs = beta_star(n_gs, s.n_excited, s.delta_e, eps).unwrap();
        for &beta in grid.iter().filter(|&&b| b >= bs) {
            let eta = nll(&s, &s.ground, beta).unwrap();
            assert!(eta <= floor + eps + 1e-10, "eps={eps} beta={beta}: eta={eta}");
        }
        // just past beta* the bound is tight to within eps by construction
        let eta_at = nll(&s, &s.ground, bs).unwrap();
        assert!(eta_at <= floor + eps + 1e-10);
    }
}

// d eta / d beta equals sum_data E(S) - N_DS * E_p[E]; check against a
// central difference of eta itself.
#[test]
fn nll_beta_derivative_matches_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let (m, p) = random_instance(&mut rng);
        let s = compute_spectrum(&m, &p).unwrap();
        let n_ts = s.n_total();
        let data: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..n_ts)).collect();
        let beta = rng.gen_range(0.2..2.0);
        let log_z = log_partition_function(&s, beta);
        let mean_e: f64 = s
            .energies
            .iter()
            .map(|&e| e * (-beta * e - log_z).exp())
            .sum();
        let analytic: f64 =
            data.iter().map(|&i| s.energies[i]).sum::<f64>() - data.len() as f64 * mean_e;
        let h = 1e-5;
        let numeric = (nll(&s, &data, beta + h).unwrap() - nll(&s, &data, beta - h).unwrap())
            / (2.0 * h);
        let scale = analytic.abs().max(1.0);
        assert!(
            (analytic - numeric).abs() < 1e-5 * scale,
            "trial {trial}: analytic {analytic} vs numeric {numeric}"
        );
    }
}

// the shifted log-sum-exp agrees with the naive sum where the latter is safe,
// and stays finite where the naive sum overflows
#[test]
fn log_partition_is_overflow_safe() {
    let (m, p) = k3_model();
    let s = compute_spectrum(&m, &p).unwrap();
    for beta in [0.0, 0.5, 1.0, 5.0] {
        let naive: f64 = s.energies.iter().map(|&e| (-beta * e).exp()).sum();
        let lz = log_partition_function(&s, beta);
        assert!((lz - naive.ln()).abs() < 1e-12, "beta={beta}");
    }
    // beta * |E0| = 3000: exp overflows f64 but the log must not
    let lz = log_partition_function(&s, 1000.0);
    assert!(lz.is_finite());
    // dominated entirely by the ground states: log Z ~ -beta E0 + log N_GS
    assert!((lz - (3000.0 + (s.n_ground() as f64).ln())).abs() < 1e-9);
}

// exact gradient vs central differences, 20 random (model, theta, data)
// triples, relative tolerance 1e-6
#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let (m, p) = random_instance(&mut rng);
        let n_ts = m.n_total_states().unwrap();
        let data: Vec<usize> = (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(0..n_ts)).collect();
        let beta = rng.gen_range(0.1..1.5);
        let grad = nll_gradient(&m, &p, &data, beta).unwrap();
        let flat = p.to_vec();
        let h = 1e-6;
        for (k, &g) in grad.iter().enumerate() {
            let mut up = flat.clone();
            let mut dn = flat.clone();
            up[k] += h;
            dn[k] -= h;
            let eval = |v: &[f64]| {
                let q = Params::from_vec(m.graph(), v).unwrap();
                nll(&compute_spectrum(&m, &q).unwrap(), &data, beta).unwrap()
            };
            let fd = (eval(&up) - eval(&dn)) / (2.0 * h);
            let scale = g.abs().max(fd.abs()).max(1.0);
            assert!(
                (g - fd).abs() / scale < 1e-6,
                "trial {trial} component {k}: exact {g} vs fd {fd}"
            );
        }
    }
}

// projected-gradient training on the two-node ferromagnet recovers a
// coupling at the bound and lowers the NLL below the theta=0 value
#[test]
fn training_reduces_nll() {
    let m = PottsModel::ising(Graph::new(2, &[(1, 2)]).unwrap());
    let bounds = ParamBounds::uniform(m.graph(), 1.0, 1.0);
    let data = vec![0usize, 3]; // (+,+) and (-,-)
    let beta = 2.0;
    let theta = train_nll(&m, &bounds, &data, beta, 200, 0.5).unwrap();
    let eta0 = nll(&compute_spectrum(&m, &Params::zeros(m.graph())).unwrap(), &data, beta).unwrap();
    let eta = nll(&compute_spectrum(&m, &theta).unwrap(), &data, beta).unwrap();
    assert!(eta < eta0 - 0.1, "training failed to improve: {eta} vs {eta0}");
    // symmetric data forces H ~ 0 and a ferromagnetic J at the box edge
    assert!(theta.h.iter().all(|&h| h.abs() < 1e-6));
    assert!((theta.j[0] + 1.0).abs() < 1e-6, "J = {}", theta.j[0]);
}

#[test]
fn csv_curve_shape() {
    let (m, p) = k3_model();
    let s = compute_spectrum(&m, &p).unwrap();
    let grid = beta_grid(0.1, 10.0, 5).unwrap();
    let csv = nll_curve_csv(&s, &s.ground, &grid).unwrap();
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines[0], "beta,eta,xi_upper,eta_inf_lower");
    assert_eq!(lines.len(), 6);
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 4);
        for field in row.split(',') {
            field.parse::<f64>().unwrap();
        }
    }
}
