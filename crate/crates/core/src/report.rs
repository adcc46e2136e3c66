//! Serialization helpers: exact rationals travel as `"num/den"` strings.

use num_rational::BigRational;
use serde::Serializer;

use crate::scalar::Scalar;

pub fn ser_rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.render())
}

pub fn ser_rationals<S: Serializer>(rs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(rs.iter().map(Scalar::render))
}

pub fn ser_scalar<T: Scalar, S: Serializer>(r: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.render())
}
