use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sccuc_core::expr::LinExpr;
use sccuc_core::grid::{
    build_ptdf, dc_flows, outage_ptdf, CostBlock, Generator, Line, StartupBlock,
};
use sccuc_core::lp::Row;
use sccuc_core::uncertainty::{
    check_chance_constraint, flow_soc, gaussian_chance_soc, inverse_normal_cdf, normal_cdf, oa_cut,
    FlowSign, FlowTerms, OaOutcome, SocLabel,
};
use sccuc_core::GridCase;

fn unit(id: u32, bus: u32) -> Generator {
    Generator {
        id,
        bus,
        p_min: 0.0,
        p_max: 100.0,
        cost_blocks: vec![CostBlock {
            slope: 10.0,
            width: 100.0,
        }],
        no_load_cost: 0.0,
        reserve_price: 1.0,
        tertiary_price: 1.0,
        startup_blocks: vec![StartupBlock {
            cost: 0.0,
            min_off: 1,
            max_off: 100,
        }],
        ramp_up: 100.0,
        ramp_down: 100.0,
        min_up: 1,
        min_down: 1,
        initial_on: true,
        initial_up_hours: 1,
        initial_down_hours: 0,
        initial_output: 0.0,
        reserve_cap: None,
    }
}

/// A connected network: a random spanning tree plus extra lines.
fn network(
    n: usize,
    parents: &[usize],
    extra: &[(usize, usize)],
    beta: &[f64],
    reference: usize,
) -> GridCase {
    let mut lines = Vec::new();
    for b in 1..n {
        lines.push((parents[b - 1] % b, b));
    }
    for &(a, b) in extra {
        let (a, b) = (a % n, b % n);
        if a != b {
            lines.push((a, b));
        }
    }
    GridCase {
        name: "random".into(),
        base_mva: 100.0,
        horizon: 1,
        buses: (1..=n as u32).collect(),
        reference_bus: (reference % n) as u32 + 1,
        reserve_cap: 100.0,
        lines: lines
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| Line {
                id: k as u32 + 1,
                from_bus: a as u32 + 1,
                to_bus: b as u32 + 1,
                susceptance: beta[k % beta.len()],
                capacity: 100.0,
            })
            .collect(),
        generators: vec![unit(1, 1)],
        loads: vec![],
        wind_farms: vec![],
        generator_contingencies: vec![],
        line_contingencies: vec![],
    }
}

/// Flows from solving the reduced `Bθ = p` by Gaussian elimination with
/// partial pivoting.
fn direct_flows(case: &GridCase, p: &[f64]) -> Vec<f64> {
    let n = case.buses.len();
    let r = case.bus_index(case.reference_bus).unwrap();
    let mut b = vec![vec![0.0; n]; n];
    for l in &case.lines {
        let i = case.bus_index(l.from_bus).unwrap();
        let j = case.bus_index(l.to_bus).unwrap();
        b[i][i] += l.susceptance;
        b[j][j] += l.susceptance;
        b[i][j] -= l.susceptance;
        b[j][i] -= l.susceptance;
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != r).collect();
    let m = keep.len();
    let mut a: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = keep.iter().map(|&j| b[i][j]).collect();
            row.push(p[i]);
            row
        })
        .collect();
    for c in 0..m {
        let piv = (c..m)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, piv);
        for row in c + 1..m {
            let f = a[row][c] / a[c][c];
            for k in c..=m {
                a[row][k] -= f * a[c][k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| a[c][k] * x[k]).sum();
        x[c] = (a[c][m] - s) / a[c][c];
    }
    let mut theta = vec![0.0; n];
    for (k, &i) in keep.iter().enumerate() {
        theta[i] = x[k];
    }
    case.lines
        .iter()
        .map(|l| {
            let i = case.bus_index(l.from_bus).unwrap();
            let j = case.bus_index(l.to_bus).unwrap();
            l.susceptance * (theta[i] - theta[j])
        })
        .collect()
}

fn balanced(raw: &[f64], n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = raw[..n].to_vec();
    let mean = p.iter().sum::<f64>() / n as f64;
    for v in &mut p {
        *v -= mean;
    }
    p
}

fn connected_without(case: &GridCase, skip: usize) -> bool {
    let n = case.buses.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for (k, l) in case.lines.iter().enumerate() {
            if k == skip {
                continue;
            }
            let a = case.bus_index(l.from_bus).unwrap();
            let b = case.bus_index(l.to_bus).unwrap();
            for (x, y) in [(a, b), (b, a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn net_strategy() -> impl Strategy<Value = (GridCase, Vec<Vec<f64>>)> {
    (2usize..8)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(0usize..64, n - 1),
                prop::collection::vec((0usize..8, 0usize..8), 0..6),
                prop::collection::vec(0.5f64..20.0, 1..8),
                0usize..8,
                prop::collection::vec(prop::collection::vec(-500.0f64..500.0, 8), 100),
            )
        })
        .prop_map(|(n, parents, extra, beta, r, inj)| {
            let case = network(n, &parents, &extra, &beta, r);
            let inj = inj.iter().map(|raw| balanced(raw, n)).collect();
            (case, inj)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ptdf_matches_direct_solve((case, injections) in net_strategy()) {
        let m = build_ptdf(&case).unwrap();
        let r = case.bus_index(case.reference_bus).unwrap();
        for l in 0..m.lines() {
            prop_assert_eq!(m.get(l, r), 0.0);
        }
        for p in &injections {
            let f = dc_flows(&m, p).unwrap();
            let g = direct_flows(&case, p);
            let scale = 1.0 + p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in f.iter().zip(&g) {
                prop_assert!((a - b).abs() <= 1e-8 * scale, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn outage_matches_rebuilt_topology((case, _) in net_strategy(), pick in 0usize..64) {
        let candidates: Vec<usize> = (0..case.lines.len()).filter(|&k| connected_without(&case, k)).collect();
        prop_assume!(!candidates.is_empty());
        let k = candidates[pick % candidates.len()];
        let m = outage_ptdf(&case, case.lines[k].id).unwrap();
        let mut reduced = case.clone();
        reduced.lines.remove(k);
        let direct = build_ptdf(&reduced).unwrap();
        for b in 0..case.buses.len() {
            prop_assert_eq!(m.get(k, b), 0.0);
        }
        for l in 0..case.lines.len() {
            if l == k {
                continue;
            }
            let lr = if l < k { l } else { l - 1 };
            for b in 0..case.buses.len() {
                prop_assert!((m.get(l, b) - direct.get(lr, b)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn islanding_outage_is_an_error((case, _) in net_strategy()) {
        for k in 0..case.lines.len() {
            if !connected_without(&case, k) {
                prop_assert!(outage_ptdf(&case, case.lines[k].id).is_err());
            }
        }
    }

    #[test]
    fn flows_are_linear((case, injections) in net_strategy(), c in -5.0f64..5.0) {
        let m = build_ptdf(&case).unwrap();
        let p = &injections[0];
        let scaled: Vec<f64> = p.iter().map(|v| c * v).collect();
        let f = dc_flows(&m, p).unwrap();
        let g = dc_flows(&m, &scaled).unwrap();
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((c * a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
        let z = inverse_normal_cdf(p).unwrap();
        prop_assert!((normal_cdf(z) - p).abs() <= 1e-10);
    }

    #[test]
    fn oa_cuts_keep_every_feasible_point(
        a in prop::collection::vec(-3.0f64..3.0, 3),
        c in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 4), 1..4),
        eps in 0.01f64..0.45,
        bound in 1.0f64..20.0,
        probe in prop::collection::vec(-30.0f64..30.0, 3),
        seed in 0u64..1000,
    ) {
        // affine = a·v, cone rows = c_k[0] + c_k[1..]·v over three variables
        let mut affine = LinExpr::default();
        for (j, &aj) in a.iter().enumerate() {
            affine.add_term(j, aj);
        }
        let cone: Vec<LinExpr> = c.iter().map(|row| {
            let mut e = LinExpr::constant(row[0]);
            for j in 0..3 {
                e.add_term(j, row[j + 1]);
            }
            e
        }).collect();
        let sigma = vec![1.0; cone.len()];
        let soc = gaussian_chance_soc(affine, cone, sigma, eps, bound, SocLabel::Custom(0)).unwrap();
        let cut = match oa_cut(&soc, &probe, 1e-6) {
            OaOutcome::Satisfied => {
                prop_assert!(check_chance_constraint(&soc, &probe) <= 1e-6);
                return Ok(());
            }
            OaOutcome::Cut(row) => row,
        };
        prop_assert!(cut.residual(&probe) > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        let mut tries = 0;
        while checked < 1000 && tries < 200_000 {
            tries += 1;
            let scale = [1.0, 5.0, 30.0][tries % 3];
            let v: Vec<f64> = (0..3).map(|_| scale * (2.0 * unit_f64(&mut rng) - 1.0)).collect();
            if check_chance_constraint(&soc, &v) <= 0.0 {
                checked += 1;
                prop_assert!(row_slack(&cut, &v) >= -1e-9, "cut cuts off a feasible point");
            }
        }
    }
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn row_slack(row: &Row, v: &[f64]) -> f64 {
    -row.residual(v)
}

/// Normal draws by Box–Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn boundary_flow_violates_at_design_rate() {
    // ring: lines (1,2), (2,3), (1,3); reference 3; unit at bus 3 with α = 1,
    // wind at buses 1 and 2
    let case = network(3, &[0, 1], &[(0, 2)], &[1.0], 2);
    let m = build_ptdf(&case).unwrap();
    let n = 1_000_000;
    for (eps, line) in [(0.1, 2usize), (0.2, 0), (0.05, 1)] {
        let row = m.row(line);
        let wind = [(0usize, 10.0), (1usize, 6.0)];
        let gens = [(2usize, 0usize, 1usize)];
        let fixed = [0.0, 0.0, 0.0];
        let terms = FlowTerms {
            ptdf_row: row,
            gens: &gens,
            fixed_injection: &fixed,
            wind: &wind,
        };
        // p = 0 and α = 1, then pick f_max so the cone holds with equality
        let probe = [0.0, 1.0];
        let soc = flow_soc(terms, eps, 0.0, FlowSign::Upper, SocLabel::Custom(0)).unwrap();
        let fmax = check_chance_constraint(&soc, &probe);
        let soc = flow_soc(terms, eps, fmax, FlowSign::Upper, SocLabel::Custom(0)).unwrap();
        assert!(check_chance_constraint(&soc, &probe).abs() < 1e-9);

        // sampled flow: Σ_w (M_w - M_gen) ω_w, since the unit absorbs Ω
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = 0;
        for _ in 0..n {
            let f: f64 = wind
                .iter()
                .map(|&(b, s)| (row[b] - row[2]) * s * gaussian(&mut rng))
                .sum();
            if f > fmax {
                hits += 1;
            }
        }
        let rate = hits as f64 / n as f64;
        let band = 3.0 * (eps * (1.0 - eps) / n as f64).sqrt();
        assert!((rate - eps).abs() <= band, "eps {eps}: rate {rate}");
    }
}
