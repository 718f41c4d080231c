pub mod bb;
pub mod bounds;
pub mod io;
pub mod lpfile;
pub mod omega;
pub mod par;
pub mod report;
pub mod scs4b;
