// scratch: refinement stability at the deepest scale
use frdtorus::numeric::rel_dev;
use frdtorus::spectral::{QuadratureRule, SpectralParams, SpectralWeight};
use frdtorus::window::{piece_window_profile, WindowOptions};

fn main() {
    let rule = QuadratureRule::default();
    for &d in &[2usize, 3] {
        for &m2 in &[1e-3f64, 1e-2] {
            let params = SpectralParams::new(1.5, m2).unwrap();
            let base = piece_window_profile(
                d,
                3,
                5,
                &params,
                &rule,
                SpectralWeight::Density,
                &WindowOptions::default(),
            )
            .unwrap();
            for (tag, opts) in [
                (
                    "1.5n/448",
                    WindowOptions {
                        momentum_points: Some(base.momentum_points * 3 / 2),
                        interp_nodes: 448,
                        ..WindowOptions::default()
                    },
                ),
                (
                    "same-n/448",
                    WindowOptions {
                        momentum_points: Some(base.momentum_points),
                        interp_nodes: 448,
                        ..WindowOptions::default()
                    },
                ),
                (
                    "1.5n/320",
                    WindowOptions {
                        momentum_points: Some(base.momentum_points * 3 / 2),
                        interp_nodes: 320,
                        ..WindowOptions::default()
                    },
                ),
            ] {
                let finer = piece_window_profile(
                    d,
                    3,
                    5,
                    &params,
                    &rule,
                    SpectralWeight::Density,
                    &opts,
                )
                .unwrap();
                let devs: Vec<String> = (0..=2u32)
                    .map(|o| format!("p{o}: {:.2e}", rel_dev(base.sup(o), finer.sup(o))))
                    .collect();
                println!(
                    "d{d} m2 {m2} {tag}: [{}] (n {} -> {}, interp_dev {:.1e} -> {:.1e})",
                    devs.join(", "),
                    base.momentum_points,
                    finer.momentum_points,
                    base.interp_dev,
                    finer.interp_dev,
                );
            }
        }
    }
}
