//! Data behind the four figures, as CSV tables.

use tracesolve::concentration::{
    prob_bound_sharp, prob_bound_simple, sharp_bound_distance, volume_ratio, volume_ratio_quantile,
};
use tracesolve::expsum::ExpSum;
use tracesolve::smoothing::phi_factor;
use tracesolve::{Result, SystemDims};

use crate::csv_out::{num, Table};
use crate::grid::Grid;

pub const FIG1_DELTA: Grid = Grid::new(0.0, 0.99, 0.01);
pub const FIG2_EPS: Grid = Grid::new(0.01, 0.95, 0.01);
pub const FIG3_OMEGA: Grid = Grid::new(0.0, 6.0, 0.05);
pub const FIG4_S: Grid = Grid::new(0.0, 18.0, 0.01);

/// `F(m, ratio*m; delta)` for `m = 2^k`, `k = kmin..=kmax`. The `width`
/// column is the distance between the deltas where `F` reaches 0.1 and 0.9.
pub fn fig1(kmin: u32, kmax: u32, ratio: usize, delta: Grid) -> Result<Table> {
    let mut t = Table::new("tracesolve-fig1/1", &["m", "n", "delta", "F", "width"])
        .param("kmin", kmin)
        .param("kmax", kmax)
        .param("ratio", ratio)
        .param("delta", delta);
    for k in kmin..=kmax {
        let m = 1usize << k;
        let n = ratio * m;
        let width = volume_ratio_quantile(m, n, 0.9)? - volume_ratio_quantile(m, n, 0.1)?;
        for d in delta.points() {
            t.push(vec![
                m.to_string(),
                n.to_string(),
                num(d),
                num(volume_ratio(m, n, d)?),
                num(width),
            ]);
        }
    }
    Ok(t)
}

/// Distance to one of the volume-ratio probability bound, next to the
/// projection value and the two exponential bounds.
pub fn fig2(particles: &[usize], eps: Grid) -> Result<Table> {
    let list: Vec<String> = particles.iter().map(|p| p.to_string()).collect();
    let mut t = Table::new(
        "tracesolve-fig2/1",
        &[
            "N",
            "eps",
            "distance",
            "sharp",
            "projection",
            "phi_form",
            "exp_form",
            "clamped",
        ],
    )
    .param("particles", list.join(" "))
    .param("eps", eps);
    for &np in particles {
        let dims = SystemDims::new(np)?;
        for e in eps.points() {
            let sharp = prob_bound_sharp(&dims, e)?;
            let simple = prob_bound_simple(&dims, e)?;
            t.push(vec![
                np.to_string(),
                num(e),
                num(sharp_bound_distance(&dims, e)?),
                num(sharp.sharp),
                num(sharp.projection),
                num(simple.phi_form),
                num(simple.exp_form),
                (sharp.clamped as u8).to_string(),
            ]);
        }
    }
    Ok(t)
}

/// Renormalized one-dimensional mollifier transforms `phi_nu(omega^2/2)`,
/// one column per order.
pub fn fig3(orders: &[u32], omega: Grid) -> Result<Table> {
    let names: Vec<String> = orders.iter().map(|nu| format!("nu{nu}")).collect();
    let mut columns = vec!["omega"];
    columns.extend(names.iter().map(String::as_str));
    let list: Vec<String> = orders.iter().map(|nu| nu.to_string()).collect();
    let mut t = Table::new("tracesolve-fig3/1", &columns)
        .param("orders", list.join(" "))
        .param("omega", omega);
    for w in omega.points() {
        let mut row = vec![num(w)];
        row.extend(orders.iter().map(|&nu| num(phi_factor(nu, 0.5 * w * w))));
        t.push(row);
    }
    Ok(t)
}

/// `s -> r v(r)` at `r = 10^s` for the grid sum with parameters `h, k1, k2`.
pub fn fig4(h: f64, k1: i64, k2: i64, s: Grid) -> Result<Table> {
    let sum = ExpSum::build(h, k1, k2)?;
    let mut t = Table::new("tracesolve-fig4/1", &["s", "phi", "abs_err"])
        .param("h", h)
        .param("k1", k1)
        .param("k2", k2)
        .param("s", s);
    for x in s.points() {
        let v = sum.window(x * std::f64::consts::LN_10);
        t.push(vec![num(x), num(v), num((v - 1.0).abs())]);
    }
    Ok(t)
}
