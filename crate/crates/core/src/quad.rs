//! Cached Gauss-Legendre rules on [-1, 1].

use gauss_quad::legendre::GaussLegendre;
use std::sync::OnceLock;

const MAX_DEGREE: usize = 32;

static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();

fn rules() -> &'static [Vec<(f64, f64)>] {
    RULES.get_or_init(|| {
        (0..=MAX_DEGREE)
            .map(|deg| {
                if deg < 2 {
                    Vec::new()
                } else {
                    let mut pairs = GaussLegendre::new(deg)
                        .expect("degree >= 2")
                        .as_node_weight_pairs()
                        .to_vec();
                    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    pairs
                }
            })
            .collect()
    })
}

/// Node/weight pairs of the `deg`-point rule on [-1, 1], nodes ascending.
pub(crate) fn gauss_legendre(deg: usize) -> &'static [(f64, f64)] {
    assert!(
        (2..=MAX_DEGREE).contains(&deg),
        "unsupported Gauss-Legendre degree {deg}"
    );
    &rules()[deg]
}

/// Integrate `g` over `[a, b]` with the `deg`-point rule.
pub(crate) fn integrate(deg: usize, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gauss_legendre(deg)
        .iter()
        .map(|&(x, w)| w * g(mid + half * x))
        .sum::<f64>()
        * half
}

/// Mapped nodes and weights of the `deg`-point rule on `[a, b]`.
pub(crate) fn mapped(deg: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gauss_legendre(deg)
        .iter()
        .map(move |&(x, w)| (mid + half * x, w * half))
}
