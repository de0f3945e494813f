use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::GatewayError;

/// Exponential backoff: the wait after failed attempt `n` (1-based) is
/// `base_delay * backoff^(n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(rename = "base_delay_ms", with = "millis")]
    pub base_delay: Duration,
    pub backoff: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, base_delay: Duration::from_millis(500), backoff: 2.0 }
    }
}

impl RetryPolicy {
    pub fn new(max_attempts: u32, base_delay: Duration, backoff: f64) -> Result<Self, GatewayError> {
        let p = Self { max_attempts, base_delay, backoff };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_attempts < 1 {
            return Err(GatewayError::Config("max_attempts must be at least 1".into()));
        }
        if !self.backoff.is_finite() || self.backoff < 1.0 {
            return Err(GatewayError::Config(format!("backoff must be >= 1, got {}", self.backoff)));
        }
        Ok(())
    }

    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1) as i32;
        self.base_delay.mul_f64(self.backoff.powi(exp))
    }

    pub fn is_retryable_status(status: u16) -> bool {
        status == 429 || (500..600).contains(&status)
    }
}

/// Outcome of a single attempt.
pub enum Attempt<T> {
    Done(T),
    Retry(String),
    Fail(GatewayError),
}

/// Runs `op` until it succeeds, fails permanently or runs out of attempts.
/// `sleep` receives each inter-attempt delay.
pub fn retry_with<T>(
    policy: &RetryPolicy,
    mut sleep: impl FnMut(Duration),
    mut op: impl FnMut(u32) -> Attempt<T>,
) -> Result<T, GatewayError> {
    let mut attempt = 1;
    loop {
        match op(attempt) {
            Attempt::Done(v) => return Ok(v),
            Attempt::Fail(e) => return Err(e),
            Attempt::Retry(message) => {
                if attempt >= policy.max_attempts {
                    return Err(GatewayError::Exhausted { attempts: attempt, message });
                }
                log::warn!("attempt {attempt} failed: {message}; retrying");
                sleep(policy.delay(attempt));
                attempt += 1;
            }
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}
