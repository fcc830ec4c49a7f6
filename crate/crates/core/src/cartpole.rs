//! CartPole-v1 dynamics with Euler integration.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole length.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = POLE_MASS * POLE_HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
/// 12 degrees.
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * core::f64::consts::PI / 360.0;
pub const MAX_EPISODE_STEPS: u32 = 500;
pub const RESET_BOUND: f64 = 0.05;

pub const OBSERVATION_DIM: usize = 4;
pub const ACTION_COUNT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Left,
    Right,
}

impl Action {
    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            Action::Left
        } else {
            Action::Right
        }
    }

    pub fn index(self) -> usize {
        match self {
            Action::Left => 0,
            Action::Right => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Action::Left => Action::Right,
            Action::Right => Action::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CartPoleError {
    #[error("episode already terminated")]
    SteppingDoneEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub steps_elapsed: u32,
}

impl CartState {
    /// Each component uniform in `[-0.05, 0.05]`.
    pub fn reset<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || rng.random_range(-RESET_BOUND..=RESET_BOUND);
        Self {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
            steps_elapsed: 0,
        }
    }

    pub fn observation(&self) -> [f64; OBSERVATION_DIM] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn is_terminal(&self) -> bool {
        self.x.abs() > X_THRESHOLD
            || self.theta.abs() > THETA_THRESHOLD
            || self.steps_elapsed >= MAX_EPISODE_STEPS
    }

    /// One `TAU` step under `action`; reward is always 1.
    pub fn step(&self, action: Action) -> Result<(CartState, f64, bool), CartPoleError> {
        if self.is_terminal() {
            return Err(CartPoleError::SteppingDoneEpisode);
        }
        let force = match action {
            Action::Left => -FORCE_MAG,
            Action::Right => FORCE_MAG,
        };
        let (sin, cos) = libm::sincos(self.theta);
        let temp = (force + POLE_MASS_LENGTH * self.theta_dot * self.theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;

        let next = CartState {
            x: self.x + TAU * self.x_dot,
            x_dot: self.x_dot + TAU * x_acc,
            theta: self.theta + TAU * self.theta_dot,
            theta_dot: self.theta_dot + TAU * theta_acc,
            steps_elapsed: self.steps_elapsed + 1,
        };
        Ok((next, 1.0, next.is_terminal()))
    }

    /// Negates the four physical components.
    pub fn mirrored(&self) -> Self {
        Self {
            x: -self.x,
            x_dot: -self.x_dot,
            theta: -self.theta,
            theta_dot: -self.theta_dot,
            steps_elapsed: self.steps_elapsed,
        }
    }
}

/// Episodic environment with a discrete action space.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    fn reset(&mut self, rng: &mut dyn RngCore) -> alloc::vec::Vec<f64>;
    /// Returns `(observation, reward, done)`.
    fn step(&mut self, action: usize) -> (alloc::vec::Vec<f64>, f64, bool);
}

#[derive(Debug, Clone, Default)]
pub struct CartPoleEnv {
    state: Option<CartState>,
}

impl CartPoleEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> Option<CartState> {
        self.state
    }
}

impl Environment for CartPoleEnv {
    fn observation_dim(&self) -> usize {
        OBSERVATION_DIM
    }

    fn action_count(&self) -> usize {
        ACTION_COUNT
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> alloc::vec::Vec<f64> {
        let state = CartState::reset(rng);
        self.state = Some(state);
        state.observation().to_vec()
    }

    /// Panics when called before `reset` or after termination.
    fn step(&mut self, action: usize) -> (alloc::vec::Vec<f64>, f64, bool) {
        let state = self.state.expect("reset before step");
        let (next, reward, done) = state
            .step(Action::from_index(action))
            .expect("episode already terminated");
        self.state = Some(next);
        (next.observation().to_vec(), reward, done)
    }
}
