//! Two-player symmetric game and the imitation probability.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Cooperate,
    Defect,
}

impl Strategy {
    pub fn is_cooperator(self) -> bool {
        matches!(self, Strategy::Cooperate)
    }

    /// 1.0 for cooperators, 0.0 for defectors; the feature encoding used by
    /// the learned recommender.
    pub fn as_bit(self) -> f64 {
        match self {
            Strategy::Cooperate => 1.0,
            Strategy::Defect => 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("temptation T = {0} outside [0, 2]")]
    TemptationOutOfRange(f64),
    #[error("sucker payoff S = {0} outside [-1, 1]")]
    SuckerOutOfRange(f64),
}

/// Payoff matrix of the one-shot game, parameterized by the temptation `T`
/// and sucker payoff `S`. Mutual cooperation pays 1, mutual defection 0;
/// those two corners are fixed and define the payoff scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameMatrix {
    temptation: f64,
    sucker: f64,
}

pub const REWARD: f64 = 1.0;
pub const PUNISHMENT: f64 = 0.0;

impl GameMatrix {
    pub fn new(temptation: f64, sucker: f64) -> Result<Self, GameError> {
        if !(0.0..=2.0).contains(&temptation) {
            return Err(GameError::TemptationOutOfRange(temptation));
        }
        if !(-1.0..=1.0).contains(&sucker) {
            return Err(GameError::SuckerOutOfRange(sucker));
        }
        Ok(GameMatrix { temptation, sucker })
    }

    /// Hardest corner of the parameter plane: T = 2, S = -1.
    pub fn prisoners_dilemma() -> Self {
        GameMatrix {
            temptation: 2.0,
            sucker: -1.0,
        }
    }

    pub fn temptation(&self) -> f64 {
        self.temptation
    }

    pub fn sucker(&self) -> f64 {
        self.sucker
    }

    /// Payoff earned by `mine` against `theirs`.
    pub fn payoff(&self, mine: Strategy, theirs: Strategy) -> f64 {
        use Strategy::*;
        match (mine, theirs) {
            (Cooperate, Cooperate) => REWARD,
            (Cooperate, Defect) => self.sucker,
            (Defect, Cooperate) => self.temptation,
            (Defect, Defect) => PUNISHMENT,
        }
    }
}

/// Probability that an agent adopts an alternative whose fitness exceeds its
/// own by `delta`, at selection intensity `beta`.
///
/// Smooth logistic in `delta`: 1/2 at zero, strictly increasing, saturating
/// at 0 and 1 for extreme arguments without overflow.
pub fn fermi(delta: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-beta * delta).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Strategy::*;

    #[test]
    fn payoff_corners() {
        let g = GameMatrix::new(1.5, -0.5).unwrap();
        assert_eq!(g.payoff(Cooperate, Cooperate), 1.0);
        assert_eq!(g.payoff(Defect, Defect), 0.0);
        assert_eq!(g.payoff(Cooperate, Defect), -0.5);
        assert_eq!(g.payoff(Defect, Cooperate), 1.5);
    }

    #[test]
    fn range_validation() {
        assert_eq!(
            GameMatrix::new(2.1, 0.0),
            Err(GameError::TemptationOutOfRange(2.1))
        );
        assert_eq!(
            GameMatrix::new(1.0, -1.5),
            Err(GameError::SuckerOutOfRange(-1.5))
        );
        assert!(GameMatrix::new(0.0, -1.0).is_ok());
        assert!(GameMatrix::new(2.0, 1.0).is_ok());
    }

    #[test]
    fn fermi_balanced_at_zero() {
        assert_eq!(fermi(0.0, 0.1), 0.5);
        assert_eq!(fermi(5.0, 0.0), 0.5);
    }

    #[test]
    fn fermi_known_values() {
        // 1/(1 + e^{-1}) and its mirror image.
        assert!((fermi(10.0, 0.1) - 0.7310585786300049).abs() < 1e-15);
        assert!((fermi(-10.0, 0.1) - 0.2689414213699951).abs() < 1e-15);
        // 1/(1 + e^{-0.5})
        assert!((fermi(10.0, 0.05) - 0.6224593312018546).abs() < 1e-15);
    }

    #[test]
    fn fermi_complement() {
        for delta in [-40.0, -3.2, -0.01, 0.7, 12.0] {
            let p = fermi(delta, 0.05);
            let q = fermi(-delta, 0.05);
            assert!((p + q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fermi_saturates() {
        assert_eq!(fermi(1e9, 1.0), 1.0);
        assert_eq!(fermi(-1e9, 1.0), 0.0);
        assert!(fermi(f64::INFINITY, 0.1) == 1.0);
    }
}
