//! Dense two-phase simplex over exact rationals with Bland's rule.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Cmp, LinearProgram, LpError, Sense, VarKind};
use crate::cost::Rational;

pub(crate) fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact optimum: objective and one value per program variable.
pub(crate) fn solve(lp: &LinearProgram) -> Result<(BigRational, Vec<BigRational>), LpError> {
    // Columns: program variables (free ones split in two), then slacks.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::new();
    let mut ncols = 0;
    for v in &lp.vars {
        match v.kind {
            VarKind::NonNegative => {
                col_of.push((ncols, None));
                ncols += 1;
            }
            VarKind::Free => {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let nslack = lp.rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    let m = lp.rows.len();
    let nreal = ncols + nslack;
    let width = nreal + m + 1;
    let mut tab: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); width]; m];
    let mut slack = ncols;
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, c) in &row.coeffs {
            let c = big(c);
            let (pos, neg) = col_of[j];
            if let Some(neg) = neg {
                tab[i][neg] -= &c;
            }
            tab[i][pos] += c;
        }
        match row.cmp {
            Cmp::Le => {
                tab[i][slack] = BigRational::one();
                slack += 1;
            }
            Cmp::Ge => {
                tab[i][slack] = -BigRational::one();
                slack += 1;
            }
            Cmp::Eq => {}
        }
        tab[i][width - 1] = big(row.rhs);
        if tab[i][width - 1].is_negative() {
            for x in tab[i].iter_mut() {
                *x = -x.clone();
            }
        }
        tab[i][nreal + i] = BigRational::one();
    }
    let mut basis: Vec<usize> = (nreal..nreal + m).collect();
    let mut phase1 = vec![BigRational::zero(); width];
    for j in nreal..nreal + m {
        phase1[j] = BigRational::one();
    }
    let mut obj = reduced(&tab, &basis, &phase1);
    run(&mut tab, &mut basis, &mut obj, nreal + m)?;
    if obj[width - 1].is_negative() {
        return Err(LpError::Infeasible);
    }
    // Drive artificial variables out of the basis or drop redundant rows.
    let mut i = 0;
    while i < tab.len() {
        if basis[i] >= nreal {
            match (0..nreal).find(|&j| !tab[i][j].is_zero()) {
                Some(j) => pivot(&mut tab, &mut basis, &mut obj, i, j),
                None => {
                    tab.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let sign = if lp.sense == Sense::Minimize { BigRational::one() } else { -BigRational::one() };
    let mut cost = vec![BigRational::zero(); width];
    for (j, v) in lp.vars.iter().enumerate() {
        let c = big(v.cost) * &sign;
        let (pos, neg) = col_of[j];
        if let Some(neg) = neg {
            cost[neg] = -c.clone();
        }
        cost[pos] = c;
    }
    let mut obj = reduced(&tab, &basis, &cost);
    run(&mut tab, &mut basis, &mut obj, nreal)?;
    let mut col_val = vec![BigRational::zero(); nreal];
    for (i, &b) in basis.iter().enumerate() {
        col_val[b] = tab[i][width - 1].clone();
    }
    let values: Vec<BigRational> = col_of
        .iter()
        .map(|&(pos, neg)| match neg {
            Some(neg) => &col_val[pos] - &col_val[neg],
            None => col_val[pos].clone(),
        })
        .collect();
    let objective = lp.vars.iter().zip(&values).map(|(v, x)| big(v.cost) * x).fold(BigRational::zero(), |a, b| a + b);
    Ok((objective, values))
}

/// Objective row `cost - c_B B^-1 A`, with minus the objective value in the last cell.
fn reduced(tab: &[Vec<BigRational>], basis: &[usize], cost: &[BigRational]) -> Vec<BigRational> {
    let mut obj = cost.to_vec();
    let last = obj.len() - 1;
    obj[last] = BigRational::zero();
    for (i, &b) in basis.iter().enumerate() {
        let cb = cost[b].clone();
        if cb.is_zero() {
            continue;
        }
        for (o, t) in obj.iter_mut().zip(&tab[i]) {
            if !t.is_zero() {
                *o -= &cb * t;
            }
        }
    }
    obj
}

/// Iterate with entering columns among the first `allowed` until optimal.
fn run(tab: &mut [Vec<BigRational>], basis: &mut [usize], obj: &mut [BigRational], allowed: usize) -> Result<(), LpError> {
    let last = obj.len() - 1;
    loop {
        let Some(j) = (0..allowed).find(|&j| obj[j].is_negative()) else { return Ok(()) };
        let mut best: Option<(BigRational, usize)> = None;
        for i in 0..tab.len() {
            if !tab[i][j].is_positive() {
                continue;
            }
            let ratio = &tab[i][last] / &tab[i][j];
            let better = match &best {
                None => true,
                Some((r, bi)) => ratio < *r || (ratio == *r && basis[i] < basis[*bi]),
            };
            if better {
                best = Some((ratio, i));
            }
        }
        let Some((_, i)) = best else { return Err(LpError::Unbounded) };
        pivot(tab, basis, obj, i, j);
    }
}

fn pivot(tab: &mut [Vec<BigRational>], basis: &mut [usize], obj: &mut [BigRational], i: usize, j: usize) {
    let p = tab[i][j].clone();
    for x in tab[i].iter_mut() {
        if !x.is_zero() {
            *x /= &p;
        }
    }
    let prow = tab[i].clone();
    let nz: Vec<usize> = (0..prow.len()).filter(|&c| !prow[c].is_zero()).collect();
    for (r, row) in tab.iter_mut().enumerate() {
        if r == i || row[j].is_zero() {
            continue;
        }
        let f = row[j].clone();
        for &c in &nz {
            row[c] -= &f * &prow[c];
        }
    }
    if !obj[j].is_zero() {
        let f = obj[j].clone();
        for &c in &nz {
            obj[c] -= &f * &prow[c];
        }
    }
    basis[i] = j;
}
