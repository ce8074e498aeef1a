// scratch tuning, deleted before ship
use std::collections::BTreeMap;
use vlasov_spray::coupled::{run, Scenario};
use vlasov_spray::diagnostics::{check_identities, CheckContext};
use vlasov_spray::grid::PhaseGrid;
use vlasov_spray::params::ModelParams;
use vlasov_spray::presets::Preset;

fn reference(nx: usize, t_end: f64, oe: usize) -> Scenario {
    let params = ModelParams::new(1.4, 1.2, 4.0, 0.05, 0.02, 0.2, 1, true).unwrap();
    let grid = PhaseGrid::new(1, nx, nx, 4.0, 5.0).unwrap();
    let mut args = BTreeMap::new();
    args.insert("rho_amp".to_string(), 0.02);
    args.insert("f_amp".to_string(), 0.4);
    args.insert("f_xi_sigma".to_string(), 0.5);
    args.insert("f_xi_center".to_string(), 1.5);
    args.insert("xi_cut".to_string(), 2.0);
    let preset = Preset::from_config("gaussian_cloud", &args, &grid).unwrap();
    Scenario { params, grid, preset, t_end, cfl: 0.4, output_every: oe, density_floor: 1e-10, config_hash: "tune".into() }
}

#[test]
fn tune_reference() {
    for (nx, oe) in [(64usize, 5usize), (128, 10), (256, 20), (128, 5)] {
        let sc = reference(nx, 2.5, oe);
        let t0 = std::time::Instant::now();
        let series = run(&sc, None).unwrap();
        let el = t0.elapsed().as_secs_f64();
        let r0 = &series.records[0];
        let rn = series.records.last().unwrap();
        let m_rho_drift = series.records.iter().map(|r| ((r.mass_rho - r0.mass_rho)/r0.mass_rho).abs()).fold(0.0f64, f64::max);
        let m_f_drift = series.records.iter().map(|r| ((r.mass_f - r0.mass_f)/r0.mass_f).abs()).fold(0.0f64, f64::max);
        let mom0 = r0.mom_total_norm();
        let mom_drift = series.records.iter().map(|r| {
            let d: f64 = r.mom_total().iter().zip(r0.mom_total().iter()).map(|(a,b)| (a-b)*(a-b)).sum::<f64>().sqrt();
            d / mom0
        }).fold(0.0f64, f64::max);
        // E monotone?
        let mut worst_increase = f64::NEG_INFINITY;
        for w in series.records.windows(2) {
            worst_increase = worst_increase.max(w[1].e_total() - w[0].e_total());
        }
        let ctx = CheckContext { dim: 1, params: sc.params.clone() };
        let rep = check_identities(&ctx, &series.records, 1e-6, 5e-2).unwrap();
        let b = rep.checks.iter().find(|c| c.id=="b").unwrap().max_residual;
        let c = rep.checks.iter().find(|c| c.id=="c").unwrap().max_residual;
        println!(
            "nx={nx}: steps={} elapsed={el:.2}s | m_rho {m_rho_drift:.2e} m_f {m_f_drift:.2e} M {mom_drift:.2e} | dE+diss {b:.3e} dI-W {c:.3e} | worstE+ {worst_increase:.2e} | M0={mom0:.4} E_end={:.4} diss0={:.4}",
            (series.records.len() - 1) * oe,
            rn.e_total(),
            r0.dissipation
        );
    }
}
