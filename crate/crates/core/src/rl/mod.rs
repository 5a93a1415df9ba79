//! Proximal policy optimisation written from scratch.
//!
//! [`mlp`] holds the network and optimizer, [`policy`] the action
//! distributions and hand-derived gradients, [`buffer`] rollout storage and
//! GAE, and [`ppo`] the agent, its update loop and rollout collection.

pub mod buffer;
pub mod mlp;
pub mod policy;
pub mod ppo;

pub use buffer::{gae, normalize_advantages, RolloutBuffer};
pub use mlp::{Adam, Mlp};
pub use policy::{ActionSpec, Actor, PolicyAction};
pub use ppo::{collect_rollout, rppo_reward, Episodic, PpoAgent, PpoConfig, UpdateStats};
