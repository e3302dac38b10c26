//! Landmark roots and type intervals of the explicit example.
use gpke::cli::landmark_checks;
use gpke::example::ExampleParams;

fn main() -> gpke::Result<()> {
    for lambda in [1.0, -1.0] {
        let e = ExampleParams::new(lambda, 1.0)?;
        println!("Λ = {lambda}");
        for c in landmark_checks(&e) {
            println!("  {:<10} {:>14.6} (reference {:>10.5}, rel {:.1e})", c.name, c.computed, c.expected, c.relative_error);
        }
        for c in e.check_type_ranges(200, 1e-3, 60.0) {
            println!(
                "  {:>10} on ({:.4}, {:.4}): {:.1}% of {} samples, {} excluded",
                c.range.tag.to_string(),
                c.range.lo,
                c.range.hi,
                100.0 * c.agreement(),
                c.samples,
                c.excluded.len()
            );
        }
    }
    Ok(())
}
