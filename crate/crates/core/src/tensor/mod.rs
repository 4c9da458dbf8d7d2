//! Shaped arrays of shares with NumPy broadcasting.
//!
//! A [`ShareTensor`] is a row-major [`SharedVec`] plus a [`Shape`]. Layout
//! operations are reindexings applied identically at every server and send
//! nothing; elementwise operations batch every element into the round count
//! of one call of the underlying protocol.

mod io;
mod large;
mod layout;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::protocols::expect_arith;
use crate::sharing::{Domain, LocalPair, SharedVec};

pub use io::{from_csv_str, read_binary, read_csv, to_csv_string, write_binary, write_csv};
pub use large::{IoStats, LargeArray};

/// Dimensions of a row-major array; empty means scalar.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Self {
        Shape { dims: dims.to_vec() }
    }

    pub fn scalar() -> Self {
        Shape { dims: Vec::new() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major element strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// Result shape of an elementwise operation, aligning trailing axes.
    pub fn broadcast(&self, other: &Shape) -> Result<Shape> {
        broadcast(self, other)
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.rank() {
            return Err(Error::shape(axis, format!("axis out of range for shape {self}")));
        }
        Ok(())
    }

    /// Shape and flat positions of a basic selection. `At` drops its axis,
    /// `Range` keeps it; axes past the selection are kept whole.
    pub fn select(&self, sel: &[Sel]) -> Result<(Shape, Vec<usize>)> {
        if sel.len() > self.rank() {
            return Err(Error::shape(self.rank(), format!("{} indices into {self}", sel.len())));
        }
        let mut ranges = Vec::with_capacity(self.rank());
        let mut dims = Vec::new();
        for (ax, d) in self.dims.iter().enumerate() {
            let (lo, hi, keep) = match sel.get(ax) {
                Some(Sel::At(i)) => (*i, i + 1, false),
                Some(Sel::Range(a, b)) => (*a, *b, true),
                None => (0, *d, true),
            };
            if lo > hi || hi > *d || (!keep && lo >= *d) {
                return Err(Error::shape(ax, format!("selection {lo}..{hi} out of range {d}")));
            }
            if keep {
                dims.push(hi - lo);
            }
            ranges.push(lo..hi);
        }
        let full = Shape::from(ranges.iter().map(|r| r.len()).collect::<Vec<_>>());
        let strides = self.strides();
        let idx = index_map(&full, |c| c.iter().enumerate().map(|(i, ci)| (ranges[i].start + ci) * strides[i]).sum());
        Ok((Shape::from(dims), idx))
    }
}

/// One axis of a basic selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sel {
    At(usize),
    Range(usize, usize),
}

impl From<Vec<usize>> for Shape {
    fn from(dims: Vec<usize>) -> Self {
        Shape { dims }
    }
}

impl From<&[usize]> for Shape {
    fn from(dims: &[usize]) -> Self {
        Shape::new(dims)
    }
}

impl<const N: usize> From<[usize; N]> for Shape {
    fn from(dims: [usize; N]) -> Self {
        Shape::new(&dims)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        if self.dims.len() == 1 {
            write!(f, ",")?;
        }
        write!(f, ")")
    }
}

/// Trailing-axis broadcasting. The error names the offending axis of the
/// result.
pub fn broadcast(a: &Shape, b: &Shape) -> Result<Shape> {
    let rank = a.rank().max(b.rank());
    let mut dims = vec![0; rank];
    for i in 0..rank {
        let da = dim_from_right(a, rank - 1 - i);
        let db = dim_from_right(b, rank - 1 - i);
        dims[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            (x, y) => {
                return Err(Error::shape(i, format!("cannot broadcast {a} with {b}: {x} vs {y}")));
            }
        };
    }
    Ok(Shape { dims })
}

/// Dimension `k` places from the right, 1 if the shape is shorter.
fn dim_from_right(s: &Shape, k: usize) -> usize {
    if k < s.rank() {
        s.dims[s.rank() - 1 - k]
    } else {
        1
    }
}

/// Calls `f` on every multi-index of `shape` in row-major order and collects
/// the returned source positions.
fn index_map(shape: &Shape, mut f: impl FnMut(&[usize]) -> usize) -> Vec<usize> {
    let n = shape.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut coord = vec![0usize; shape.rank()];
    for _ in 0..n {
        out.push(f(&coord));
        for ax in (0..coord.len()).rev() {
            coord[ax] += 1;
            if coord[ax] < shape.dims[ax] {
                break;
            }
            coord[ax] = 0;
        }
    }
    out
}

/// Source positions that expand a `from`-shaped array to `to`.
fn broadcast_indices(from: &Shape, to: &Shape) -> Vec<usize> {
    let lead = to.rank() - from.rank();
    let strides = from.strides();
    index_map(to, |c| (0..from.rank()).map(|i| if from.dims[i] == 1 { 0 } else { c[i + lead] * strides[i] }).sum())
}

/// `(m, k, p, result dims)` for a rank 1 or 2 product.
fn dot_dims(a: &Shape, b: &Shape) -> Result<(usize, usize, usize, Vec<usize>)> {
    let (m, k) = match a.dims() {
        [k] => (1, *k),
        [m, k] => (*m, *k),
        _ => return Err(Error::shape(0, format!("dot needs rank 1 or 2, got {a}"))),
    };
    let (k2, p) = match b.dims() {
        [k] => (*k, 1),
        [k, p] => (*k, *p),
        _ => return Err(Error::shape(0, format!("dot needs rank 1 or 2, got {b}"))),
    };
    if k != k2 {
        return Err(Error::shape(a.rank() - 1, format!("inner dimensions differ: {a} vs {b}")));
    }
    let mut dims = Vec::new();
    if a.rank() == 2 {
        dims.push(m);
    }
    if b.rank() == 2 {
        dims.push(p);
    }
    Ok((m, k, p, dims))
}

/// A cleartext row-major array, for inputs, public operands and results.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: impl Into<Shape>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        if shape.len() != data.len() {
            return Err(Error::shape(0, format!("{} values for shape {shape}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: Shape::scalar(), data: vec![v] }
    }

    pub fn filled(shape: impl Into<Shape>, v: f64) -> Self {
        let shape = shape.into();
        Tensor { data: vec![v; shape.len()], shape }
    }

    /// Values replicated to a broadcast-compatible larger shape.
    pub fn expand(&self, to: &Shape) -> Vec<f64> {
        broadcast_indices(&self.shape, to).iter().map(|i| self.data[*i]).collect()
    }

    pub fn index(&self, sel: &[Sel]) -> Result<Tensor> {
        let (shape, idx) = self.shape.select(sel)?;
        Ok(Tensor { shape, data: idx.iter().map(|i| self.data[*i]).collect() })
    }

    /// Overwrites a selection with `value`, broadcast to its shape.
    pub fn assign(&mut self, sel: &[Sel], value: &Tensor) -> Result<()> {
        let (shape, idx) = self.shape.select(sel)?;
        check_fits(&value.shape, &shape)?;
        for (i, v) in idx.iter().zip(value.expand(&shape)) {
            self.data[*i] = v;
        }
        Ok(())
    }
}

impl Tensor {
    fn remap(&self, (shape, idx): (Shape, Vec<usize>)) -> Tensor {
        Tensor { shape, data: idx.iter().map(|i| self.data[*i]).collect() }
    }

    pub fn reshape(&self, dims: &[Option<usize>]) -> Result<Tensor> {
        Ok(Tensor { shape: layout::reshape(&self.shape, dims)?, data: self.data.clone() })
    }

    pub fn flatten(&self) -> Tensor {
        Tensor { shape: Shape::new(&[self.data.len()]), data: self.data.clone() }
    }

    pub fn transpose(&self, axes: Option<&[usize]>) -> Result<Tensor> {
        Ok(self.remap(layout::transpose(&self.shape, axes)?))
    }

    pub fn repeat(&self, repeats: usize, axis: Option<usize>) -> Result<Tensor> {
        Ok(self.remap(layout::repeat(&self.shape, repeats, axis)?))
    }

    pub fn tile(&self, reps: &[usize]) -> Tensor {
        self.remap(layout::tile(&self.shape, reps))
    }

    pub fn take(&self, indices: &[usize], axis: usize) -> Result<Tensor> {
        Ok(self.remap(layout::take(&self.shape, indices, axis)?))
    }

    /// Folds each lane along `axis` (all elements for `None`).
    pub fn reduce(&self, axis: Option<usize>, f: impl Fn(&[f64]) -> f64) -> Result<Tensor> {
        let (shape, width, order) = layout::lanes(&self.shape, axis)?;
        let vals: Vec<f64> = order.iter().map(|i| self.data[*i]).collect();
        let data = if width == 0 { vec![f(&[]); shape.len()] } else { vals.chunks(width).map(&f).collect() };
        Ok(Tensor { shape, data })
    }

    /// Elementwise `f` over the broadcast of both shapes.
    pub fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let shape = broadcast(&self.shape, &other.shape)?;
        let (a, b) = (self.expand(&shape), other.expand(&shape));
        Ok(Tensor { shape, data: a.iter().zip(&b).map(|(x, y)| f(*x, *y)).collect() })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|v| f(*v)).collect() }
    }

    /// Rank 1 or 2 product with NumPy `dot` shapes.
    pub fn dot(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k, p, dims) = dot_dims(&self.shape, &other.shape)?;
        let mut out = vec![0.0; m * p];
        for i in 0..m {
            for l in 0..k {
                for j in 0..p {
                    out[i * p + j] += self.data[i * k + l] * other.data[l * p + j];
                }
            }
        }
        Ok(Tensor { shape: Shape::from(dims), data: out })
    }
}

fn check_fits(value: &Shape, target: &Shape) -> Result<()> {
    if &broadcast(value, target)? != target {
        return Err(Error::shape(0, format!("cannot assign {value} into {target}")));
    }
    Ok(())
}

/// A shaped shared array. Bit tensors come out of comparisons and feed
/// selections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareTensor {
    shape: Shape,
    data: SharedVec,
}

impl ShareTensor {
    pub fn new(shape: impl Into<Shape>, data: SharedVec) -> Result<Self> {
        let shape = shape.into();
        if shape.len() != data.len() {
            return Err(Error::shape(0, format!("{} elements for shape {shape}", data.len())));
        }
        Ok(ShareTensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &SharedVec {
        &self.data
    }

    pub fn into_data(self) -> SharedVec {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_bits(&self) -> bool {
        self.data.domain().arith().is_none()
    }

    /// Shares a client's cleartext array.
    pub fn input(e: &mut Engine, client: u32, t: &Tensor) -> Result<Self> {
        let data = e.share_input(client, &t.data)?;
        Ok(ShareTensor { shape: t.shape.clone(), data })
    }

    /// Trivial shares of a public array; no messages.
    pub fn public(e: &Engine, t: &Tensor) -> Result<Self> {
        let data = e.share_public(&t.data)?;
        Ok(ShareTensor { shape: t.shape.clone(), data })
    }

    pub fn zeros(e: &Engine, shape: impl Into<Shape>) -> Result<Self> {
        Self::public(e, &Tensor::filled(shape, 0.0))
    }

    pub fn ones(e: &Engine, shape: impl Into<Shape>) -> Result<Self> {
        Self::public(e, &Tensor::filled(shape, 1.0))
    }

    /// Opens to client 0. Bit tensors open to 0.0 / 1.0.
    pub fn reveal(&self, e: &mut Engine) -> Result<Tensor> {
        let data = if self.is_bits() {
            e.reveal_bits(&self.data)?.into_iter().map(|b| b as f64).collect()
        } else {
            e.reveal(&self.data)?
        };
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    fn same_shape(&self, shape: Shape, data: SharedVec) -> ShareTensor {
        debug_assert_eq!(shape.len(), data.len());
        ShareTensor { shape, data }
    }

    /// Expands to a broadcast-compatible larger shape by replication.
    pub fn broadcast_to(&self, shape: &Shape) -> Result<Self> {
        let out = broadcast(&self.shape, shape)?;
        if &out != shape {
            return Err(Error::shape(0, format!("{} does not broadcast to {shape}", self.shape)));
        }
        if &self.shape == shape {
            return Ok(self.clone());
        }
        Ok(self.same_shape(out, self.data.gather(&broadcast_indices(&self.shape, shape))))
    }

    fn pair(&self, other: &ShareTensor) -> Result<(Shape, SharedVec, SharedVec)> {
        let shape = broadcast(&self.shape, &other.shape)?;
        let a = self.broadcast_to(&shape)?.data;
        let b = other.broadcast_to(&shape)?.data;
        if a.domain() != b.domain() {
            return Err(Error::Domain("operands live in different domains".into()));
        }
        Ok((shape, a, b))
    }

    /// Free addition.
    pub fn add(&self, other: &ShareTensor) -> Result<Self> {
        let (shape, a, b) = self.pair(other)?;
        Ok(self.same_shape(shape, a.add(&b)))
    }

    pub fn sub(&self, other: &ShareTensor) -> Result<Self> {
        let (shape, a, b) = self.pair(other)?;
        Ok(self.same_shape(shape, a.sub(&b)))
    }

    pub fn neg(&self) -> Self {
        self.same_shape(self.shape.clone(), self.data.neg())
    }

    /// Elementwise product, one round for any size.
    pub fn mul(&self, e: &mut Engine, other: &ShareTensor) -> Result<Self> {
        let (shape, a, b) = self.pair(other)?;
        let data = if self.is_bits() { e.bit_and(&a, &b)? } else { e.mul(&a, &b)? };
        Ok(self.same_shape(shape, data))
    }

    /// Bit tensor of `self < other`.
    pub fn lt(&self, e: &mut Engine, other: &ShareTensor) -> Result<Self> {
        let (shape, a, b) = self.pair(other)?;
        Ok(self.same_shape(shape, e.less_than(&a, &b)?))
    }

    /// Bit tensor of `self > other`.
    pub fn gt(&self, e: &mut Engine, other: &ShareTensor) -> Result<Self> {
        other.lt(e, self)
    }

    /// `cond ? a : b` elementwise over the broadcast of all three shapes.
    pub fn mux(e: &mut Engine, cond: &ShareTensor, a: &ShareTensor, b: &ShareTensor) -> Result<Self> {
        let shape = broadcast(&broadcast(&cond.shape, &a.shape)?, &b.shape)?;
        let c = cond.broadcast_to(&shape)?;
        let x = a.broadcast_to(&shape)?;
        let y = b.broadcast_to(&shape)?;
        let data = e.mux(&c.data, &x.data, &y.data)?;
        Ok(ShareTensor { shape, data })
    }

    pub fn add_public(&self, e: &Engine, t: &Tensor) -> Result<Self> {
        let shape = broadcast(&self.shape, &t.shape)?;
        let x = self.broadcast_to(&shape)?;
        let data = e.add_public(&x.data, &t.expand(&shape))?;
        Ok(ShareTensor { shape, data })
    }

    /// Product with a public array; local truncation, no messages.
    pub fn mul_public(&self, e: &Engine, t: &Tensor) -> Result<Self> {
        let shape = broadcast(&self.shape, &t.shape)?;
        let x = self.broadcast_to(&shape)?;
        let data = e.mul_public(&x.data, &t.expand(&shape))?;
        Ok(ShareTensor { shape, data })
    }

    pub fn add_scalar(&self, e: &Engine, v: f64) -> Result<Self> {
        self.add_public(e, &Tensor::scalar(v))
    }

    pub fn mul_scalar(&self, e: &Engine, v: f64) -> Result<Self> {
        self.mul_public(e, &Tensor::scalar(v))
    }

    /// Applies a length-preserving elementwise engine operation, such as
    /// `Engine::relu`, to the flat data.
    pub fn map(&self, e: &mut Engine, f: impl FnOnce(&mut Engine, &SharedVec) -> Result<SharedVec>) -> Result<Self> {
        let data = f(e, &self.data)?;
        if data.len() != self.len() {
            return Err(Error::shape(0, format!("map changed length {} to {}", self.len(), data.len())));
        }
        Ok(self.same_shape(self.shape.clone(), data))
    }

    pub fn clip(&self, e: &mut Engine, lo: f64, hi: f64) -> Result<Self> {
        self.map(e, |e, x| e.clip(x, lo, hi))
    }

    /// Matrix and vector products with NumPy `dot` semantics for ranks 1
    /// and 2. One round; each server sends two elements per output entry and
    /// truncates once per output entry after accumulating.
    pub fn dot(&self, e: &mut Engine, other: &ShareTensor) -> Result<Self> {
        let cfg = expect_arith(&self.data, "dot")?;
        let (m, k, p, dims) = dot_dims(&self.shape, &other.shape)?;
        let mask = cfg.ring().mask();
        let data = e.bilinear(
            &self.data,
            &other.data,
            m * p,
            move |a, b, _| {
                let mut out = vec![0u128; m * p];
                for i in 0..m {
                    let row = &a[i * k..(i + 1) * k];
                    for (l, av) in row.iter().enumerate() {
                        let brow = &b[l * p..(l + 1) * p];
                        for (o, bv) in out[i * p..(i + 1) * p].iter_mut().zip(brow) {
                            *o = o.wrapping_add(av.wrapping_mul(*bv));
                        }
                    }
                }
                out.iter_mut().for_each(|v| *v &= mask);
                out
            },
            true,
        )?;
        Ok(ShareTensor { shape: Shape { dims }, data })
    }

    /// `u v^T` for vectors; one round, two elements per entry per server.
    pub fn outer(&self, e: &mut Engine, other: &ShareTensor) -> Result<Self> {
        let cfg = expect_arith(&self.data, "outer")?;
        for t in [self, other] {
            if t.shape.rank() != 1 {
                return Err(Error::shape(0, format!("outer needs vectors, got {}", t.shape)));
            }
        }
        let (m, p) = (self.len(), other.len());
        let mask = cfg.ring().mask();
        let data = e.bilinear(
            &self.data,
            &other.data,
            m * p,
            move |a, b, _| a.iter().flat_map(|x| b.iter().map(move |y| x.wrapping_mul(*y) & mask)).collect(),
            true,
        )?;
        Ok(ShareTensor { shape: Shape::new(&[m, p]), data })
    }

    /// Same elements, new shape. One dimension may be `None` and is inferred.
    pub fn reshape(&self, dims: &[Option<usize>]) -> Result<Self> {
        let shape = layout::reshape(&self.shape, dims)?;
        Ok(self.same_shape(shape, self.data.clone()))
    }

    pub fn flatten(&self) -> Self {
        self.same_shape(Shape::new(&[self.len()]), self.data.clone())
    }

    fn remap(&self, (shape, idx): (Shape, Vec<usize>)) -> Self {
        self.same_shape(shape, self.data.gather(&idx))
    }

    /// Permutes axes; `None` reverses them.
    pub fn transpose(&self, axes: Option<&[usize]>) -> Result<Self> {
        Ok(self.remap(layout::transpose(&self.shape, axes)?))
    }

    /// Repeats each element `repeats` times along `axis`; `None` flattens
    /// first.
    pub fn repeat(&self, repeats: usize, axis: Option<usize>) -> Result<Self> {
        Ok(self.remap(layout::repeat(&self.shape, repeats, axis)?))
    }

    /// Tiles the whole array `reps` times per axis, aligning from the right.
    pub fn tile(&self, reps: &[usize]) -> Self {
        self.remap(layout::tile(&self.shape, reps))
    }

    /// Selects public positions along `axis`.
    pub fn take(&self, indices: &[usize], axis: usize) -> Result<Self> {
        Ok(self.remap(layout::take(&self.shape, indices, axis)?))
    }

    /// The scalar at a multi-index.
    pub fn get(&self, coord: &[usize]) -> Result<Self> {
        if coord.len() != self.shape.rank() {
            return Err(Error::shape(0, format!("{}-index into {}", coord.len(), self.shape)));
        }
        let sel: Vec<Sel> = coord.iter().map(|c| Sel::At(*c)).collect();
        self.index(&sel)
    }

    fn lanes(&self, axis: Option<usize>) -> Result<(Shape, usize, Vec<usize>)> {
        layout::lanes(&self.shape, axis)
    }

    /// Free sum along `axis` (all axes for `None`).
    pub fn sum(&self, axis: Option<usize>) -> Result<Self> {
        let (shape, width, order) = self.lanes(axis)?;
        let rows = shape.len();
        let lane = |j: usize| -> Vec<usize> { (0..rows).map(|r| order[r * width + j]).collect() };
        let mut acc = SharedVec::public(self.data.domain(), &vec![0; rows]);
        for j in 0..width {
            acc = acc.add(&self.data.gather(&lane(j)));
        }
        Ok(self.same_shape(shape, acc))
    }

    /// Sum times the public reciprocal of the count.
    pub fn mean(&self, e: &Engine, axis: Option<usize>) -> Result<Self> {
        let count = match axis {
            None => self.len(),
            Some(a) => {
                self.shape.check_axis(a)?;
                self.shape.dims[a]
            }
        };
        if count == 0 {
            return Err(Error::EmptyAxis(axis.unwrap_or(0)));
        }
        self.sum(axis)?.mul_scalar(e, 1.0 / count as f64)
    }

    fn extreme(&self, e: &mut Engine, axis: Option<usize>, max: bool) -> Result<(Self, Self)> {
        let (shape, width, order) = self.lanes(axis)?;
        if width == 0 {
            return Err(Error::EmptyAxis(axis.unwrap_or(0)));
        }
        let rows = self.data.gather(&order);
        let (v, i) = if max { e.max_rows(&rows, width)? } else { e.min_rows(&rows, width)? };
        Ok((self.same_shape(shape.clone(), v), self.same_shape(shape, i)))
    }

    pub fn max(&self, e: &mut Engine, axis: Option<usize>) -> Result<Self> {
        Ok(self.extreme(e, axis, true)?.0)
    }

    pub fn min(&self, e: &mut Engine, axis: Option<usize>) -> Result<Self> {
        Ok(self.extreme(e, axis, false)?.0)
    }

    /// Shared index of the first maximum, as a fixed-point integer.
    pub fn argmax(&self, e: &mut Engine, axis: Option<usize>) -> Result<Self> {
        Ok(self.extreme(e, axis, true)?.1)
    }

    pub fn argmin(&self, e: &mut Engine, axis: Option<usize>) -> Result<Self> {
        Ok(self.extreme(e, axis, false)?.1)
    }

    pub fn index(&self, sel: &[Sel]) -> Result<Self> {
        let (shape, idx) = self.shape.select(sel)?;
        Ok(self.same_shape(shape, self.data.gather(&idx)))
    }

    /// Overwrites a selection with `value`, broadcast to its shape. Local.
    pub fn assign(&self, sel: &[Sel], value: &ShareTensor) -> Result<Self> {
        let (shape, idx) = self.shape.select(sel)?;
        check_fits(&value.shape, &shape)?;
        if value.domain() != self.domain() {
            return Err(Error::Domain("assigning across domains".into()));
        }
        let v = value.broadcast_to(&shape)?;
        let mut src: Vec<usize> = (0..self.len()).collect();
        for (k, i) in idx.iter().enumerate() {
            src[*i] = self.len() + k;
        }
        let data = SharedVec::concat(&[&self.data, &v.data]).gather(&src);
        Ok(self.same_shape(self.shape.clone(), data))
    }

    /// Rank 1 or 2 product with a public matrix, on either side. Local: each
    /// component is multiplied by the encoded matrix and truncated once per
    /// output entry.
    pub fn dot_public(&self, t: &Tensor, public_left: bool) -> Result<Self> {
        let cfg = expect_arith(&self.data, "dot")?;
        let (ls, rs) = if public_left { (&t.shape, &self.shape) } else { (&self.shape, &t.shape) };
        let (m, k, p, dims) = dot_dims(ls, rs)?;
        let raw = t.data.iter().map(|v| cfg.encode_raw(*v)).collect::<Result<Vec<_>>>()?;
        let ring = cfg.ring();
        let mask = ring.mask();
        let prod = |a: &[u128], b: &[u128]| -> Vec<u128> {
            let mut out = vec![0u128; m * p];
            for i in 0..m {
                for l in 0..k {
                    let av = a[i * k + l];
                    for j in 0..p {
                        out[i * p + j] = out[i * p + j].wrapping_add(av.wrapping_mul(b[l * p + j]));
                    }
                }
            }
            out.into_iter().map(|v| ring.truncate_share(v & mask, cfg.d)).collect()
        };
        let apply = |v: &[u128]| if public_left { prod(&raw, v) } else { prod(v, &raw) };
        let data =
            self.data.map_local(self.data.domain(), |_, pair| LocalPair::new(apply(&pair.first), apply(&pair.second)));
        Ok(ShareTensor { shape: Shape { dims }, data })
    }

    pub(crate) fn domain(&self) -> Domain {
        self.data.domain()
    }
}
