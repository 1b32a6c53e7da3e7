use crate::error::{Error, Result};
use crate::objectives::PayoffData;
use crate::state::State;

fn halves<'a>(payoff: &PayoffData, xy: &'a State) -> Result<(&'a [f64], &'a [f64])> {
    let (x, y) = xy
        .split_pair()
        .ok_or_else(|| Error::Domain(format!("alternating play needs a bipartite pair, got {}", xy.chart().name())))?;
    if x.len() != payoff.x_dim() || y.len() != payoff.y_dim() {
        return Err(Error::Domain(format!(
            "state blocks {}+{} do not match payoff {}+{}",
            x.len(),
            y.len(),
            payoff.x_dim(),
            payoff.y_dim()
        )));
    }
    Ok((x, y))
}

/// `X ← X + η₁𝐀Y`, then `Y ← Y + η₂𝐀ᵀX` with the already updated `X`.
pub fn alt_play_step(payoff: &PayoffData, eta1: f64, eta2: f64, xy: &State) -> Result<State> {
    let (x, y) = halves(payoff, xy)?;
    let ay = payoff.apply(y);
    let x_next: Vec<f64> = x.iter().zip(&ay).map(|(a, b)| a + eta1 * b).collect();
    let atx = payoff.apply_transpose(&x_next);
    let y_next: Vec<f64> = y.iter().zip(&atx).map(|(a, b)| a + eta2 * b).collect();
    let mut out = x_next;
    out.extend(y_next);
    xy.with_coords(out)
}

/// Undoes the two half-updates in reverse order.
pub fn alt_play_inverse(payoff: &PayoffData, eta1: f64, eta2: f64, xy: &State) -> Result<State> {
    let (x_next, y_next) = halves(payoff, xy)?;
    let atx = payoff.apply_transpose(x_next);
    let y: Vec<f64> = y_next.iter().zip(&atx).map(|(a, b)| a - eta2 * b).collect();
    let ay = payoff.apply(&y);
    let x: Vec<f64> = x_next.iter().zip(&ay).map(|(a, b)| a - eta1 * b).collect();
    let mut out = x;
    out.extend(y);
    xy.with_coords(out)
}
