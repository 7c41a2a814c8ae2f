/// Per-dimension standardisation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Dimensions with zero spread; their scale is pinned to 1.
    pub degenerate: Vec<usize>,
}

impl Standardizer {
    pub fn identity(width: usize) -> Standardizer {
        Standardizer {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
            degenerate: Vec::new(),
        }
    }

    /// Mean and population standard deviation of each column.
    pub fn fit<'a, I>(rows: I, width: usize) -> Standardizer
    where
        I: IntoIterator<Item = &'a [f64]> + Clone,
    {
        let mut n = 0usize;
        let mut mean = vec![0.0; width];
        for row in rows.clone() {
            n += 1;
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        if n == 0 {
            return Standardizer::identity(width);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; width];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut degenerate = Vec::new();
        let scale = var
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    degenerate.push(i);
                    1.0
                }
            })
            .collect();
        Standardizer {
            mean,
            scale,
            degenerate,
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// Input and target standardisation fitted on the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub input: Standardizer,
    pub target: Standardizer,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_and_inverts() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let s = Standardizer::fit(rows.iter().map(Vec::as_slice), 2);
        assert_eq!(s.mean, vec![3.0, 5.0]);
        assert!((s.scale[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.scale[1], 1.0);
        assert_eq!(s.degenerate, vec![1]);
        let z = s.transform(&[3.0, 5.0]);
        assert_eq!(z, vec![0.0, 0.0]);
        let back = s.inverse(&s.transform(&[4.2, 1.0]));
        assert!((back[0] - 4.2).abs() < 1e-12 && (back[1] - 1.0).abs() < 1e-12);
    }
}
