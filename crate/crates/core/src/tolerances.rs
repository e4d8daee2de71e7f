//! Centralized numerical tolerances.
//!
//! Every verdict threshold used by the pipeline lives here so that reports
//! can echo the exact values they were judged against. Thresholds fall into
//! three bands: machine-precision checks on exact arithmetic (1e-12),
//! accumulated-rounding checks on compositions and iterative linear algebra
//! (1e-8 / 1e-9), and method-limited checks where a finite-difference or
//! integration error floor dominates (1e-6).

/// Antisymmetry of a constant Poisson tensor: exact arithmetic, rounding only.
pub const ANTISYM_CONST: f64 = 1e-12;

/// Antisymmetry of a position-dependent tensor sampled over a box.
pub const ANTISYM_FIELD: f64 = 1e-9;

/// Max |{{f,g},h} + cyc.| accepted as "Jacobi holds" on sampled triples.
pub const JACOBI_DEFECT: f64 = 1e-9;

/// Bracket antisymmetry |{f,g} + {g,f}| on samples.
pub const BRACKET_ANTISYM: f64 = 1e-12;

/// Leibniz rule and bracket/vector-field convention consistency on samples.
pub const BRACKET_CONSISTENCY: f64 = 1e-9;

/// Forward-mode gradient vs central finite differences (step 1e-6); the
/// comparison is relative, `1e-6 * (1 + |grad|)` componentwise.
pub const GRAD_VS_FD: f64 = 1e-6;

/// Group identity map residual |Phi_0(m) - m|.
pub const ACTION_IDENTITY: f64 = 1e-12;

/// Generator vs finite-difference of the finite map at t = 0.
pub const GENERATOR_FD: f64 = 1e-6;

/// Invariance violation max |f(Phi_g m) - f(m)| for family members.
pub const INVARIANCE: f64 = 1e-9;

/// Canonicity violation max |{f.Phi, h.Phi}(m) - {f,h}(Phi m)|.
pub const CANONICITY: f64 = 1e-9;

/// Abelian composition residual act(p1, act(p2, m)) vs act(p1+p2, m).
pub const ABELIAN: f64 = 1e-9;

/// Default absolute and relative tolerance of the adaptive integrator.
pub const FLOW_TOL: f64 = 1e-10;

/// Default step-count ceiling per integration.
pub const FLOW_MAX_STEPS: usize = 1_000_000;

/// Conserved-quantity drift along flows (energy, Casimirs, leaf monitors).
pub const DRIFT: f64 = 1e-8;

/// Flow-word re-execution reproducibility of a leaf cloud point.
pub const LEAF_REPRODUCE: f64 = 1e-8;

/// Relative singular-value cutoff for the rank of a distribution frame.
pub const RANK_REL: f64 = 1e-8;

/// Required ratio between the smallest retained and largest discarded
/// singular value; below this the frame is flagged ill-conditioned.
pub const RANK_GAP: f64 = 1e3;

/// Relative SVD threshold for the isotropy-algebra null space.
pub const NULLSPACE_REL: f64 = 1e-8;

/// Max distance of an accepted isotropy generator from the frame span.
pub const ISOTROPY_RESIDUAL: f64 = 1e-8;

/// Max change of reduced-form entries under representative substitution.
pub const WELL_DEFINEDNESS: f64 = 1e-8;

/// Nondegeneracy: sigma_min(Omega) must exceed this times sigma_max(Omega).
pub const NONDEGENERACY_REL: f64 = 1e-8;

/// Residual of the reduced form against a supplied leaf parameterization.
pub const LEAF_FORM_RESIDUAL: f64 = 1e-8;

/// Leafchart internal consistency (embedding vs inverse, tangency, leaf
/// constraints at sampled parameters).
pub const LEAFCHART_CONSISTENCY: f64 = 1e-6;

/// Universal-cover distance of a traced cloud to a candidate line.
pub const LINE_DISTANCE: f64 = 1e-6;

/// Default target distance for leaf-membership shooting.
pub const MEMBERSHIP: f64 = 1e-6;

/// Finite-difference step used for generator compatibility checks.
pub const FD_STEP: f64 = 1e-6;
