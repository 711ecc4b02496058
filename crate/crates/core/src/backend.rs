//! Blocking JSON-over-HTTP client shared by the external backends
//! (segmenter, monolingual LID, scorer).

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub retries: u32,
    pub max_inflight: usize,
    pub timeout: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            retries: 3,
            max_inflight: 4,
            timeout: Duration::from_secs(60),
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Inflight {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl Inflight {
    fn acquire(&self) -> InflightGuard<'_> {
        let mut n = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        InflightGuard(self)
    }
}

struct InflightGuard<'a>(&'a Inflight);

impl Drop for InflightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.permits.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.freed.notify_one();
    }
}

pub struct JsonEndpoint {
    url: String,
    agent: ureq::Agent,
    config: ClientConfig,
    inflight: Inflight,
}

impl JsonEndpoint {
    pub fn new(url: impl Into<String>, config: ClientConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let permits = config.max_inflight.max(1);
        Self {
            url: url.into(),
            agent,
            config,
            inflight: Inflight {
                permits: Mutex::new(permits),
                freed: Condvar::new(),
            },
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// POSTs `body` and decodes the JSON response, retrying transport
    /// failures and non-2xx statuses up to the configured count.
    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp> {
        let text = self.post_text(body)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::backend(&self.url, format!("malformed response: {e}: {text}")))
    }

    /// Like [`JsonEndpoint::post`] but returns the raw 2xx response body.
    pub fn post_text<Req: Serialize>(&self, body: &Req) -> Result<String> {
        let _permit = self.inflight.acquire();
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(20 * u64::from(attempt)));
            }
            match self.agent.post(&self.url).send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status();
                    let text = resp.body_mut().read_to_string();
                    if status.is_success() {
                        return text.map_err(|e| {
                            Error::backend(&self.url, format!("unreadable response: {e}"))
                        });
                    }
                    last = format!(
                        "HTTP {}: {}",
                        status.as_u16(),
                        text.unwrap_or_default().trim()
                    );
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::backend(
            &self.url,
            format!("unreachable after {} attempts: {last}", self.config.retries + 1),
        ))
    }
}
