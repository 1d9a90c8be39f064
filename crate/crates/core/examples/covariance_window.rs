// Sign of the queue/server covariance in overload as mu varies.
use erlangs::diffusion::{covariance_sign_thresholds, stationary_moments};
use erlangs::model::ModelParams;

pub fn run() -> Result<Vec<(f64, f64)>, Box<dyn std::error::Error>> {
    let (lambda, theta, p, gamma, c) = (12.0, 0.2, 0.3, 1.0, 10.0);
    let t = covariance_sign_thresholds(lambda, theta, p, gamma, c);
    println!("negative covariance for {:.4} < mu < {:.4}", t.mu_neg, t.mu_ol);
    let mut out = Vec::new();
    for mu in [1.0, 1.5, 1.75, 1.8, 1.85, 2.5] {
        let m = stationary_moments(&ModelParams::new(lambda, mu, theta, p, gamma, c)?)?;
        println!("mu={mu:5.2}  {:3}  v_qs={:+.5}", m.regime.to_string(), m.v_qs);
        out.push((mu, m.v_qs));
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
