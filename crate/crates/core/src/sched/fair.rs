use super::{Decision, PipeliningChoice, Policy};
use crate::resource::max_min_fair;
use crate::sim::View;

/// No gating; every runnable task gets its max-min fair share.
#[derive(Debug, Clone, Default)]
pub struct FairShare {
    pub pipelining: PipeliningChoice,
}

pub fn fair_share_policy() -> FairShare {
    FairShare::default()
}

impl Policy for FairShare {
    fn name(&self) -> String {
        "fair".into()
    }

    fn pipelining(&self) -> &PipeliningChoice {
        &self.pipelining
    }

    fn with_pipelining(&self, choice: PipeliningChoice) -> Box<dyn Policy> {
        Box::new(FairShare { pipelining: choice })
    }

    fn decide(&self, view: &View<'_>) -> Decision {
        Decision::rates(max_min_fair(&view.demands(), &view.world.caps))
    }
}
