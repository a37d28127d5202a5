use std::sync::{Condvar, Mutex};

/// Counting semaphore bounding outstanding requests.
#[derive(Debug)]
pub(crate) struct Gate {
    limit: usize,
    in_use: Mutex<usize>,
    freed: Condvar,
}

pub(crate) struct Permit<'a>(&'a Gate);

impl Gate {
    pub fn new(limit: usize) -> Self {
        assert!(limit >= 1);
        Self { limit, in_use: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_use.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_use.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}
