//! Car sequencing optimisation suite.
//!
//! The optimisation variant of car sequencing orders `D` cars on an
//! assembly line so that, for every option `j`, at most `p[j]` cars
//! requiring the option appear in any `q[j]` consecutive positions; window
//! violations are penalised rather than forbidden. This crate bundles the
//! pieces needed to study the problem end to end:
//!
//! - [`core`]: the instance/sequence data model and exact evaluation;
//! - [`formats`]: benchmark instance files (`.csq`) and run logs (`.runs`);
//! - [`generator`]: fourteen seeded benchmark instance families;
//! - [`features`]: fourteen static instance features;
//! - [`projection`]: feature normalisation and the 2-D instance space;
//! - [`exact`]: branch-and-bound, a brute-force oracle, and lazy window
//!   activation;
//! - [`lraco`]: Lagrangian relaxation with subgradient updates and an ant
//!   colony repair stage;
//! - [`lns`]: sliding-window and adaptive large neighbourhood search;
//! - [`harness`]: seeded experiments over instance sets and pairwise
//!   performance labels;
//! - [`algoselect`]: algorithm-selection classifiers and cross-validation;
//! - [`cli`]: the `carseq` command line gluing everything together.
//!
//! The accompanying book (`book/` in the repository) walks through each
//! concept with runnable snippets; those snippets compile as doc-tests of
//! this crate.

pub mod budget;
pub mod core;
pub mod exact;
pub mod cli;
pub mod features;
pub mod formats;
pub mod generator;
pub mod seeding;
