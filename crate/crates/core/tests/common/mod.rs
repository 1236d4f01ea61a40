#![allow(dead_code)]

use std::sync::Arc;

use su3ff::bethe::{search, SearchOptions};
use su3ff::model::SiteRep;
use su3ff::{BetheState, Coupling, ModelSpec, Twist, XxxChain, C64};

pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn chain(reps: &[SiteRep]) -> Arc<ModelSpec> {
    let xi = [
        cx(0.13, 0.05),
        cx(-0.41, 0.22),
        cx(0.37, -0.18),
        cx(-0.07, -0.31),
        cx(0.24, 0.43),
    ];
    let c = Coupling::new(cx(1.0, 0.0)).unwrap();
    Arc::new(
        XxxChain::with_reps(xi[..reps.len()].to_vec(), reps.to_vec(), c)
            .unwrap()
            .into(),
    )
}

pub fn fundamental(len: usize) -> Arc<ModelSpec> {
    chain(&vec![SiteRep::Fundamental; len])
}

pub fn states(model: &Arc<ModelSpec>, a: usize, b: usize) -> Vec<BetheState> {
    search(
        model.clone(),
        a,
        b,
        Twist::identity(),
        &SearchOptions::default(),
    )
    .states
}

/// Ordered pairs of distinct states with no root in common.
pub fn disjoint_pairs(sec: &[BetheState]) -> Vec<(&BetheState, &BetheState)> {
    let mut out = Vec::new();
    for (i, c) in sec.iter().enumerate() {
        for (j, b) in sec.iter().enumerate() {
            if i != j && su3ff::formfactor::roots_disjoint(c, b) {
                out.push((c, b));
            }
        }
    }
    out
}
