//! Index maps for zero-communication layout operations. Each returns the
//! result shape and, per result element in row-major order, its source
//! position.

use super::{index_map, Shape};
use crate::error::{Error, Result};

pub(super) fn reshape(from: &Shape, dims: &[Option<usize>]) -> Result<Shape> {
    let len = from.len();
    let known: usize = dims.iter().flatten().product();
    let free: Vec<usize> = (0..dims.len()).filter(|i| dims[*i].is_none()).collect();
    let resolved: Vec<usize> = match free.as_slice() {
        [] => dims.iter().map(|d| d.unwrap_or(0)).collect(),
        [ax] => {
            if known == 0 || len % known != 0 {
                return Err(Error::shape(*ax, format!("cannot infer from {len} elements")));
            }
            dims.iter().map(|d| d.unwrap_or(len / known)).collect()
        }
        [_, second, ..] => return Err(Error::shape(*second, "only one dimension can be inferred")),
    };
    let shape = Shape::from(resolved);
    if shape.len() != len {
        return Err(Error::shape(0, format!("cannot reshape {from} into {shape}")));
    }
    Ok(shape)
}

pub(super) fn transpose(from: &Shape, axes: Option<&[usize]>) -> Result<(Shape, Vec<usize>)> {
    let rank = from.rank();
    let perm: Vec<usize> = match axes {
        Some(a) => a.to_vec(),
        None => (0..rank).rev().collect(),
    };
    if perm.len() != rank {
        return Err(Error::shape(0, format!("{} axes for rank {rank}", perm.len())));
    }
    let mut seen = vec![false; rank];
    for (i, p) in perm.iter().enumerate() {
        if *p >= rank || seen[*p] {
            return Err(Error::shape(i, "axes are not a permutation"));
        }
        seen[*p] = true;
    }
    let src = from.strides();
    let shape = Shape::from(perm.iter().map(|p| from.dims()[*p]).collect::<Vec<_>>());
    let idx = index_map(&shape, |c| c.iter().zip(&perm).map(|(ci, p)| ci * src[*p]).sum());
    Ok((shape, idx))
}

pub(super) fn repeat(from: &Shape, repeats: usize, axis: Option<usize>) -> Result<(Shape, Vec<usize>)> {
    let flat;
    let (base, axis) = match axis {
        Some(a) => {
            from.check_axis(a)?;
            (from, a)
        }
        None => {
            flat = Shape::new(&[from.len()]);
            (&flat, 0)
        }
    };
    let mut dims = base.dims().to_vec();
    dims[axis] *= repeats;
    let shape = Shape::from(dims);
    let src = base.strides();
    let idx = index_map(&shape, |c| {
        c.iter().enumerate().map(|(i, ci)| if i == axis { ci / repeats } else { *ci } * src[i]).sum()
    });
    Ok((shape, idx))
}

pub(super) fn tile(from: &Shape, reps: &[usize]) -> (Shape, Vec<usize>) {
    let rank = from.rank().max(reps.len());
    let pad = |v: &[usize]| {
        let mut out = vec![1; rank - v.len()];
        out.extend_from_slice(v);
        out
    };
    let base = Shape::from(pad(from.dims()));
    let reps = pad(reps);
    let shape = Shape::from(base.dims().iter().zip(&reps).map(|(d, r)| d * r).collect::<Vec<_>>());
    let src = base.strides();
    let idx = index_map(&shape, |c| c.iter().enumerate().map(|(i, ci)| (ci % base.dims()[i]) * src[i]).sum());
    (shape, idx)
}

pub(super) fn take(from: &Shape, indices: &[usize], axis: usize) -> Result<(Shape, Vec<usize>)> {
    from.check_axis(axis)?;
    let size = from.dims()[axis];
    if let Some(bad) = indices.iter().find(|i| **i >= size) {
        return Err(Error::shape(axis, format!("index {bad} out of range {size}")));
    }
    let mut dims = from.dims().to_vec();
    dims[axis] = indices.len();
    let shape = Shape::from(dims);
    let src = from.strides();
    let idx = index_map(&shape, |c| {
        c.iter().enumerate().map(|(i, ci)| if i == axis { indices[*ci] } else { *ci } * src[i]).sum()
    });
    Ok((shape, idx))
}

/// Result shape, lane width, and the flat positions of every lane laid end
/// to end. `None` makes one lane of everything.
pub(super) fn lanes(from: &Shape, axis: Option<usize>) -> Result<(Shape, usize, Vec<usize>)> {
    let Some(ax) = axis else {
        return Ok((Shape::scalar(), from.len(), (0..from.len()).collect()));
    };
    from.check_axis(ax)?;
    let mut dims = from.dims().to_vec();
    let width = dims.remove(ax);
    let out = Shape::from(dims);
    let strides = from.strides();
    let mut order = Vec::with_capacity(from.len());
    index_map(&out, |c| {
        let base: usize = (0..c.len()).map(|i| c[i] * strides[if i < ax { i } else { i + 1 }]).sum();
        order.extend((0..width).map(|j| base + j * strides[ax]));
        0
    });
    Ok((out, width, order))
}
