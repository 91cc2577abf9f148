use hodowave::config::RunConfig;
use hodowave::pipeline::run_converge;

fn main() {
    let cfg_text = r#"
schema_version = 1
[material]
preset = "linear"
[scenario]
name = "wavy"
phi1 = 0.0
lambda = 0.0
psi0 = 0.9
y_range = [-3.141592653589793, 3.141592653589793]
phi2 = "0.2*sin(x)"
psi1 = "1 + 0.1*sin(x)"
psi2 = "0.5 + 0.1*cos(x)"
[grid]
n_tau = 32
n_y = 32
delta = 0.05
[solver]
tol = 1e-10
max_iters = 60
[converge]
n_tau_grids = [32, 64, 128]
"#;
    let cfg = RunConfig::from_str(cfg_text).unwrap();
    let t0 = std::time::Instant::now();
    match run_converge(&cfg, std::path::Path::new("/tmp/conv_out")) {
        Ok(art) => {
            for r in &art.rows {
                println!("{:12} n_tau={:4} norm={:.4e} order={:?} exact={}", r.quantity, r.n_tau, r.norm, r.order, r.exact);
            }
            println!("passed: {}", art.passed);
        }
        Err(e) => println!("converge failed: {e}"),
    }
    println!("elapsed: {:.1?}", t0.elapsed());
}
