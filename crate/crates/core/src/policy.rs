//! The base-policy abstraction: given a context, produce an action;
//! optionally consume feedback.

use rand_chacha::ChaCha12Rng;

use crate::types::{ActionSpace, Context, LossValue, PolicyGroup};
use crate::Result;

/// One labelled training example, as fed back to learnable policies.
#[derive(Debug, Clone)]
pub struct Feedback {
    pub context: Context,
    pub action_id: usize,
    pub loss: LossValue,
}

/// Uniform interface over the M base policies the selector samples among.
///
/// Implementations are single-writer: one logical owner calls `act` and
/// `update` sequentially. `act` takes `&self`; any randomness comes from
/// the caller-supplied stream so trajectories stay reproducible.
pub trait BasePolicy: Send {
    /// A stable name identifying this policy's RNG stream. Policies keep
    /// the same name whether they run stand-alone or inside a roster, so
    /// degenerate rosters reproduce stand-alone trajectories exactly.
    fn stream_name(&self) -> &str;

    /// Selects an action for the context. The returned id is always a
    /// valid index into the action space.
    fn act(&self, context: &Context, rng: &mut ChaCha12Rng) -> Result<usize>;

    /// Consumes one batch of feedback, in order. Static policies ignore it.
    fn update(&mut self, batch: &[Feedback]) -> Result<()> {
        let _ = batch;
        Ok(())
    }

    /// The policy's deterministic exploitation choice, when it has one.
    /// Used for hypothetical (counterfactual) evaluation.
    fn greedy(&self, context: &Context) -> Option<usize> {
        let _ = context;
        None
    }
}

/// Follows a policy for one context. Thin wrapper that keeps the call
/// site uniform between owned and boxed policies.
pub fn policy_act(
    policy: &dyn BasePolicy,
    context: &Context,
    rng: &mut ChaCha12Rng,
) -> Result<usize> {
    policy.act(context, rng)
}

/// A policy that always plays one fixed action. Useful as a degenerate
/// roster member in tests and reductions.
pub struct ConstantPolicy {
    action_id: usize,
    name: String,
}

impl ConstantPolicy {
    pub fn new(action_id: usize, name: impl Into<String>) -> Self {
        Self {
            action_id,
            name: name.into(),
        }
    }
}

impl BasePolicy for ConstantPolicy {
    fn stream_name(&self) -> &str {
        &self.name
    }

    fn act(&self, _context: &Context, _rng: &mut ChaCha12Rng) -> Result<usize> {
        Ok(self.action_id)
    }

    fn greedy(&self, _context: &Context) -> Option<usize> {
        Some(self.action_id)
    }
}

/// A roster entry: the policy plus its group tag.
pub struct RosterEntry {
    pub policy: Box<dyn BasePolicy>,
    pub group: PolicyGroup,
}

/// Checks that a context is compatible with an action space / expected
/// context dimension pair.
pub fn check_context_dim(context: &Context, expected: usize) -> Result<()> {
    if context.dim() != expected {
        return Err(crate::Error::Dimension {
            expected,
            got: context.dim(),
        });
    }
    Ok(())
}

/// Checks an action id against the space.
pub fn check_action_id(actions: &ActionSpace, id: usize) -> Result<()> {
    if id >= actions.len() {
        return Err(crate::Error::Config(format!(
            "action id {id} outside action space of size {}",
            actions.len()
        )));
    }
    Ok(())
}
