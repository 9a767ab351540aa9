use std::f64::consts::PI;

/// Frequency encoding `(sin(2^k pi p), cos(2^k pi p))` for `k < frequencies`,
/// optionally prefixed by `p` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingConfig {
    pub frequencies: usize,
    pub include_identity: bool,
}

impl EncodingConfig {
    pub fn new(frequencies: usize, include_identity: bool) -> Self {
        Self {
            frequencies,
            include_identity,
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        input_dim * (2 * self.frequencies + usize::from(self.include_identity))
    }
}

/// Encodes every component of `p` (expected in `[-1, 1]`).
///
/// Layout: the identity block (if any) first, then for each frequency the
/// sines of all components followed by their cosines.
pub fn positional_encode(p: &[f64], cfg: &EncodingConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.output_dim(p.len()));
    encode_into(p, cfg, &mut out);
    out
}

pub(crate) fn encode_into(p: &[f64], cfg: &EncodingConfig, out: &mut Vec<f64>) {
    if cfg.include_identity {
        out.extend_from_slice(p);
    }
    let mut scale = PI;
    for _ in 0..cfg.frequencies {
        out.extend(p.iter().map(|&x| (scale * x).sin()));
        out.extend(p.iter().map(|&x| (scale * x).cos()));
        scale *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input() {
        let out = positional_encode(&[0.0], &EncodingConfig::new(2, false));
        assert_eq!(out, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn unit_input_single_frequency() {
        let out = positional_encode(&[1.0], &EncodingConfig::new(1, false));
        assert!(out[0].abs() < 1e-15);
        assert_eq!(out[1], -1.0);
    }

    #[test]
    fn half_input_matches_direct_evaluation() {
        let cfg = EncodingConfig::new(3, true);
        let out = positional_encode(&[0.5], &cfg);
        let mut expected = vec![0.5];
        for k in 0..3 {
            let a = 2f64.powi(k) * PI * 0.5;
            expected.push(a.sin());
            expected.push(a.cos());
        }
        assert_eq!(out.len(), 7);
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dimensionality() {
        for l in 0..5 {
            for id in [false, true] {
                let cfg = EncodingConfig::new(l, id);
                assert_eq!(positional_encode(&[0.1, -0.2, 0.3], &cfg).len(), cfg.output_dim(3));
            }
        }
    }
}
