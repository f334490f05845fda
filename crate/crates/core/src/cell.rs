use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exterior::check_dim;
use crate::poly::{int, Scalar};

/// Axis-aligned box `Π [a_i, b_i]` with `a_i < b_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellBox {
    lower: Vec<Scalar>,
    upper: Vec<Scalar>,
}

impl CellBox {
    pub fn new(lower: Vec<Scalar>, upper: Vec<Scalar>) -> Result<Self> {
        check_dim(lower.len())?;
        if lower.len() != upper.len() {
            return Err(Error::domain("box corners have different lengths"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            return Err(Error::domain("box must satisfy lower < upper on every axis"));
        }
        Ok(Self { lower, upper })
    }

    /// `T = [−1, 1]ⁿ`.
    pub fn reference(n: usize) -> Self {
        Self {
            lower: vec![int(-1); n],
            upper: vec![int(1); n],
        }
    }

    pub fn unit(n: usize) -> Self {
        Self {
            lower: vec![Scalar::zero(); n],
            upper: vec![Scalar::one(); n],
        }
    }

    /// Box of the given edge lengths centered at the origin.
    pub fn centered(widths: &[Scalar]) -> Result<Self> {
        let two = int(2);
        Self::new(
            widths.iter().map(|h| -(h / &two)).collect(),
            widths.iter().map(|h| h / &two).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[Scalar] {
        &self.lower
    }

    pub fn upper(&self) -> &[Scalar] {
        &self.upper
    }

    pub fn center(&self) -> Vec<Scalar> {
        let two = int(2);
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (a + b) / &two)
            .collect()
    }

    pub fn widths(&self) -> Vec<Scalar> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> Scalar {
        self.widths().iter().fold(Scalar::one(), |acc, h| acc * h)
    }

    /// The translate of this box centered at the origin.
    pub fn to_centered(&self) -> CellBox {
        CellBox::centered(&self.widths()).expect("widths of a valid box are positive")
    }

    /// Ratio of longest to shortest edge.
    pub fn aspect_ratio(&self) -> Scalar {
        let w = self.widths();
        let max = w.iter().max().cloned().unwrap_or_else(Scalar::one);
        let min = w.iter().min().cloned().unwrap_or_else(Scalar::one);
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(CellBox::new(vec![int(0)], vec![int(0)]).is_err());
        assert!(CellBox::new(vec![int(0), int(0)], vec![int(1)]).is_err());
        assert!(CellBox::new(vec![], vec![]).is_err());
    }

    #[test]
    fn geometry() {
        let k = CellBox::new(vec![int(0), int(0)], vec![int(1), int(3)]).unwrap();
        assert_eq!(k.center(), vec![rat(1, 2), rat(3, 2)]);
        assert_eq!(k.volume(), int(3));
        assert_eq!(k.aspect_ratio(), int(3));
        let c = k.to_centered();
        assert_eq!(c.lower(), &[rat(-1, 2), rat(-3, 2)]);
        assert_eq!(CellBox::reference(3).volume(), int(8));
    }
}
