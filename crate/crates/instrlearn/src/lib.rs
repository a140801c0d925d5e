//! File formats, the session store, the experiment server, the training
//! sweep and the command-line front end for [`instrlearn_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod params_file;
pub mod server;
pub mod store;
pub mod sweep;

pub use error::Error;
