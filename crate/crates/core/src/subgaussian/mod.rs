//! Variance-proxy estimation and sufficient conditions for subgaussianity.
//!
//! A centered variable is σ²-subgaussian when E[e^{λ(X−μ)}] ≤ e^{λ²σ²/2}
//! for every λ; the smallest such σ² is τ²(X). The estimator in [`proxy`]
//! maximises 2(ln M(λ) − λμ)/λ² over a λ-grid, while [`criteria`] holds the
//! moment-based sufficient conditions and [`beta`] applies both to the Beta
//! family.

pub mod beta;
pub mod chi;
pub mod criteria;
pub mod proxy;

pub use beta::{
    affine_norm_property_test, beta_variance_proxy, check_beta_conjecture, check_beta_theorem,
    conjecture_bound, theorem_bound, AffineNormReport, BetaConjectureCheck, BetaTheoremCheck,
};
pub use chi::{chi_checks, ChiReport, ChiTailCheck, CHI_TAIL_EPSILONS};
pub use criteria::{
    beta_centered_moments, centered_moment_criterion, raw_moment_criterion, technical_lemma_check,
    termwise_mgf_comparison, CenteredCriterionReport, LemmaRow, MomentCriterionReport,
    TermwiseRow,
};
pub use proxy::{
    tail_bound, variance_proxy_sup, variance_proxy_sup_with, GridSpec, ProxyMethod, Side,
    TailBoundResult, VarianceProxyEstimate,
};
