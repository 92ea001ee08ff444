//! Background rolling evaluations that outlive their request.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use parking_lot::RwLock;

use crate::error::ApiError;
use crate::sessions::random_id;

pub struct Job {
    pub estimated_fits: usize,
    started: Instant,
    completed: AtomicUsize,
    outcome: OnceLock<(Instant, Result<String, ApiError>)>,
}

impl Job {
    pub fn outcome(&self) -> Option<&Result<String, ApiError>> {
        self.outcome.get().map(|(_, r)| r)
    }

    pub fn completed(&self) -> usize {
        self.completed.load(Ordering::Acquire)
    }

    pub fn elapsed(&self) -> Duration {
        match self.outcome.get() {
            Some((done, _)) => done.duration_since(self.started),
            None => self.started.elapsed(),
        }
    }

    fn finish(&self, result: Result<String, ApiError>) {
        if self.outcome.set((Instant::now(), result)).is_ok() {
            self.completed.store(1, Ordering::Release);
        }
    }
}

pub struct JobStore {
    retention: Duration,
    jobs: RwLock<HashMap<String, Arc<Job>>>,
}

impl JobStore {
    pub fn new(retention: Duration) -> Self {
        JobStore {
            retention,
            jobs: RwLock::new(HashMap::new()),
        }
    }

    /// Runs `work` on the blocking pool and returns the new job id at once.
    pub fn spawn<F>(&self, estimated_fits: usize, work: F) -> String
    where
        F: FnOnce() -> Result<String, ApiError> + Send + 'static,
    {
        let id = random_id();
        let job = Arc::new(Job {
            estimated_fits,
            started: Instant::now(),
            completed: AtomicUsize::new(0),
            outcome: OnceLock::new(),
        });
        self.jobs.write().insert(id.clone(), Arc::clone(&job));
        let handle = tokio::task::spawn_blocking(work);
        tokio::spawn(async move {
            let result = handle
                .await
                .unwrap_or_else(|e| Err(ApiError::Internal(format!("job aborted: {e}"))));
            job.finish(result);
        });
        id
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().get(id).cloned()
    }

    /// Forgets finished jobs older than the retention period.
    pub fn sweep(&self) -> usize {
        let now = Instant::now();
        let mut jobs = self.jobs.write();
        let before = jobs.len();
        jobs.retain(|_, j| match j.outcome.get() {
            Some((done, _)) => now.duration_since(*done) < self.retention,
            None => true,
        });
        before - jobs.len()
    }

    pub fn len(&self) -> usize {
        self.jobs.read().len()
    }
}
