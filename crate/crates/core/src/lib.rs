// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Random hyperbolic graphs in the disc and band models, modularity of
//! partitions, and seeded experiments checking that sector partitions of
//! these graphs have modularity approaching one.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod modularity;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
