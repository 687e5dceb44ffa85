//! Time-aware item-based collaborative filtering.
//!
//! The pipeline: parse and preprocess an implicit-feedback log
//! ([`dataset`]), build a sparse item-item cosine model ([`similarity`]),
//! weight each rating by its age through a decay function ([`decay`]) when
//! scoring candidates ([`recommender`]), and evaluate with a
//! leave-the-latest-out split and hit-rate ([`evaluation`]). The
//! [`temporal`] module measures how much each past rating says about a
//! user's latest item as a function of its age, and fits the three-phase
//! trend that motivates the piecewise decay.

pub mod cli;
pub mod dataset;
pub mod decay;
pub mod evaluation;
pub mod recommender;
pub mod similarity;
pub mod synth;
pub mod temporal;

pub use dataset::{parse_events, preprocess, split_leave_latest, Dataset, LogFormat, RatingEvent, RatingLog, TrainSet};
pub use decay::{DecayFunction, DecaySpec, Family};
pub use evaluation::{evaluate, grid_sweep, hit_rate, EvalReport, Evaluator, ParamGrid};
pub use recommender::{score_items, top_n, ScoreVector};
pub use similarity::{similarity_row, SimilarityModel};
pub use synth::{generate_synthetic, SynthConfig};
pub use temporal::{collect_ssnr_ages, compute_fsnr, compute_ssnr, fit_piecewise_trend, log_bin_average};
