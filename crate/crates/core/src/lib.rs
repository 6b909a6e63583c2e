pub mod algebra;
pub mod check;
pub mod error;
pub mod group;
pub mod hmodule;
pub mod krein;
pub mod numkit;
pub mod maps;
pub mod ksgns;
pub mod covariant;
pub mod instance;
pub mod crossed;
pub mod cli;
