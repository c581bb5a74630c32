pub mod error;
pub mod kinematics;
pub mod contact;
pub mod config;
pub mod robot;
pub mod estimators;
pub mod io;
pub mod simdata;
pub mod replay;
pub mod evaluation;
