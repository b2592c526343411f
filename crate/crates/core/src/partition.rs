//! Fair-share mapping of the global neuron space onto workers.

use crate::connectome::GridSpec;
use crate::error::{Error, Result};
use crate::Gid;

/// Contiguous gid blocks of `loc_n = N / H` neurons per worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionPlan {
    workers: u32,
    neurons: u32,
    loc_n: u32,
    neurons_per_column: u32,
}

impl PartitionPlan {
    /// Either every worker holds a whole number of columns, or every column is
    /// split over a whole number of workers.
    pub fn new(grid: &GridSpec, workers: u32) -> Result<Self> {
        if workers == 0 {
            return Err(Error::config("workers", "must be >= 1"));
        }
        let neurons = grid.total_neurons();
        if neurons > u32::MAX as u64 {
            return Err(Error::config("grid", "more than 2^32 neurons"));
        }
        let neurons = neurons as u32;
        if !neurons.is_multiple_of(workers) {
            return Err(Error::config("workers", "worker count must divide the neuron count"));
        }
        let columns = grid.columns();
        let whole_columns = columns.is_multiple_of(workers);
        let split_columns = workers.is_multiple_of(columns);
        if !(whole_columns || split_columns) {
            return Err(Error::config(
                "workers",
                "worker count must be a divisor or a multiple of the column count",
            ));
        }
        Ok(Self { workers, neurons, loc_n: neurons / workers, neurons_per_column: grid.neurons_per_column })
    }

    pub fn workers(&self) -> u32 {
        self.workers
    }

    pub fn neurons(&self) -> u32 {
        self.neurons
    }

    pub fn loc_n(&self) -> u32 {
        self.loc_n
    }

    pub fn owner_of(&self, gid: Gid) -> Result<u32> {
        self.check_gid(gid)?;
        Ok(gid / self.loc_n)
    }

    pub fn local_index(&self, gid: Gid) -> Result<(u32, u32)> {
        self.check_gid(gid)?;
        Ok((gid / self.loc_n, gid % self.loc_n))
    }

    pub fn global_of(&self, worker: u32, local: u32) -> Result<Gid> {
        if worker >= self.workers {
            return Err(Error::OutOfRange { what: "worker", value: worker as u64, limit: self.workers as u64 });
        }
        if local >= self.loc_n {
            return Err(Error::OutOfRange { what: "local id", value: local as u64, limit: self.loc_n as u64 });
        }
        Ok(worker * self.loc_n + local)
    }

    /// Gids owned by `worker`.
    pub fn range_of(&self, worker: u32) -> core::ops::Range<Gid> {
        let start = worker * self.loc_n;
        start..start + self.loc_n
    }

    /// Columns touched by `worker`'s gid range.
    pub fn columns_of(&self, worker: u32) -> core::ops::Range<u32> {
        let r = self.range_of(worker);
        r.start / self.neurons_per_column..(r.end - 1) / self.neurons_per_column + 1
    }

    fn check_gid(&self, gid: Gid) -> Result<()> {
        if gid >= self.neurons {
            return Err(Error::OutOfRange { what: "gid", value: gid as u64, limit: self.neurons as u64 });
        }
        Ok(())
    }
}
