//! The shared reward: achieved spectral efficiency minus an interference
//! penalty expressed in the same log-domain units.

/// r = own_se - beta * sum over victims of log2(1 + I_caused / N), where
/// `caused` carries (interference watts, noise watts) per victim.
pub fn reward(own_se: f64, caused: &[(f64, f64)], beta: f64) -> f64 {
    let penalty: f64 = caused
        .iter()
        .map(|&(i_w, n_w)| {
            if n_w > 0.0 {
                (1.0 + i_w / n_w).log2()
            } else {
                0.0
            }
        })
        .sum();
    own_se - beta * penalty
}
