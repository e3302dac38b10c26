//! Look for algebraically general seeds in every integrable case.
use gpke::cases::{find_nondegenerate_seed, AlgebraCase, CaseTag, ModelParams, SearchBox};

fn main() {
    let params = ModelParams::new(-1.0).with_m0(0.25).with_alpha0(0.5).with_zeta0(0.3);
    for tag in CaseTag::ALL {
        let case = match AlgebraCase::new(tag, params) {
            Ok(c) => c,
            Err(e) => {
                println!("{tag:>8}: {e}");
                continue;
            }
        };
        let axes = SearchBox::axes(tag);
        match find_nondegenerate_seed(&case, &SearchBox::default_for(tag), 400) {
            Ok(c) => println!(
                "{tag:>8}: {} = {:+.3}, {} = {:+.3}, D = {:+.3e}, margin {:.1e}",
                axes[0], c.coords[0], axes[1], c.coords[1], c.d, c.relative_margin
            ),
            Err(e) => println!("{tag:>8}: {e}"),
        }
    }
}
