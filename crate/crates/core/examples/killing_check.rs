//! Lie derivative of the example metric along its three Killing vectors.
use gpke::cli::example_killing_fields;
use gpke::example::{ExampleParams, SamplingBox};
use gpke::geometry::{killing_residual, killing_residual_exact, ExampleMetric, FdConfig};

fn main() -> gpke::Result<()> {
    let e = ExampleParams::new(1.0, 1.0)?;
    let field = ExampleMetric(e);
    let (points, _) = e.random_points(20, 3, SamplingBox::default());
    for k in example_killing_fields(&e)? {
        let (mut fd, mut exact) = (0.0f64, 0.0f64);
        for pt in &points {
            fd = fd.max(killing_residual(&k, &field, pt, &FdConfig::default())?.relative_residual());
            exact = exact.max(killing_residual_exact(&k, &field, pt)?.relative_residual());
        }
        println!("{}: max |L_K g| / max |g|  FD {fd:.1e}  exact {exact:.1e}", k.name);
    }
    Ok(())
}
