//! Thermodynamic formalism for a partially hyperbolic skew-product
//! `F(x, y) = (σx, f_x(y))` over a subshift of finite type, with fibers that
//! deform a hyperbolic toral automorphism near a fixed point.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

pub mod conjugacy;
pub mod equilibrium;
pub mod pressure;
pub mod scalar;
pub mod skew;
pub mod stability;
pub mod symbolic;
pub mod torus;

use thiserror::Error;

pub use scalar::Scalar;

/// Any error raised by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Symbolic(#[from] symbolic::SymbolicError),
    #[error(transparent)]
    Torus(#[from] torus::TorusError),
    #[error(transparent)]
    Skew(#[from] skew::SkewError),
    #[error(transparent)]
    Conjugacy(#[from] conjugacy::ConjugacyError),
    #[error(transparent)]
    Pressure(#[from] pressure::PressureError),
    #[error(transparent)]
    Equilibrium(#[from] equilibrium::EquilibriumError),
    #[error(transparent)]
    Stability(#[from] stability::StabilityError),
}

pub type GibbsState64 = symbolic::GibbsState<f64>;
pub type BasePotential64 = symbolic::BasePotential<f64>;
pub type ToralAutomorphism64 = torus::ToralAutomorphism<f64>;
pub type FiberFamily64 = torus::FiberFamily<f64>;
pub type SkewSystem64 = skew::SkewSystem<f64>;
pub type Point64 = skew::Point<f64>;
pub type ProductPotential64 = skew::ProductPotential<f64>;
pub type SemiConjugacy64 = conjugacy::SemiConjugacy<f64>;
pub type LiftedState64 = equilibrium::LiftedState<f64>;

pub type GibbsState32 = symbolic::GibbsState<f32>;
pub type BasePotential32 = symbolic::BasePotential<f32>;
pub type ToralAutomorphism32 = torus::ToralAutomorphism<f32>;
pub type FiberFamily32 = torus::FiberFamily<f32>;
pub type SkewSystem32 = skew::SkewSystem<f32>;
pub type Point32 = skew::Point<f32>;
pub type ProductPotential32 = skew::ProductPotential<f32>;
pub type SemiConjugacy32 = conjugacy::SemiConjugacy<f32>;
pub type LiftedState32 = equilibrium::LiftedState<f32>;
