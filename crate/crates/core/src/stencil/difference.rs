use super::StencilError;
use crate::scalar::Scalar;
use crate::solver::GridFunction;

fn neighbor(node: &[i64], e: &[i32], times: i64) -> Vec<i64> {
    node.iter().zip(e).map(|(&i, &o)| i + times * i64::from(o)).collect()
}

fn lookup<T: Scalar>(v: &GridFunction<T>, node: &[i64], k: isize, at: &[i64]) -> Result<T, StencilError> {
    v.value_at(at).ok_or_else(|| StencilError::MissingNeighbor { node: node.to_vec(), k })
}

/// `(v(x + h e_k) - v(x)) / h` for the signed direction `k`.
pub fn forward_difference<T: Scalar>(v: &GridFunction<T>, node: &[i64], k: isize) -> Result<T, StencilError> {
    let e = v.grid().directions().offset(k)?;
    let here = lookup(v, node, 0, node)?;
    let there = lookup(v, node, k, &neighbor(node, &e, 1))?;
    Ok((there - here) / v.grid().h())
}

/// `(v(x + h e_k) - 2 v(x) + v(x - h e_k)) / h^2`.
pub fn second_difference<T: Scalar>(v: &GridFunction<T>, node: &[i64], k: isize) -> Result<T, StencilError> {
    let e = v.grid().directions().offset(k)?;
    let here = lookup(v, node, 0, node)?;
    let plus = lookup(v, node, k, &neighbor(node, &e, 1))?;
    let minus = lookup(v, node, -k, &neighbor(node, &e, -1))?;
    let h = v.grid().h();
    Ok((plus - here - here + minus) / (h * h))
}
