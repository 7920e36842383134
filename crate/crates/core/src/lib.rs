pub mod at_infinity;
pub mod atlas;
pub mod axiom_suite;
pub mod chamber_system;
pub mod coxeter;
pub mod lambda;
pub mod local_structure;
pub mod model_space;
pub mod report;
pub mod retraction;
