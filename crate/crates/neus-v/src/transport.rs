//! Shared blocking HTTP transport for the chat-completions wire shape,
//! with bounded retries and exponential backoff.

use std::time::Duration;

use serde_json::Value;

#[derive(Debug)]
pub(crate) struct TransportFailure {
    pub attempts: u32,
    pub message: String,
}

pub(crate) struct HttpChat {
    agent: ureq::Agent,
    endpoint: String,
    bearer: Option<String>,
    attempts: u32,
    initial_backoff: Duration,
}

impl HttpChat {
    pub fn new(
        endpoint: String,
        bearer: Option<String>,
        timeout: Duration,
        attempts: u32,
        initial_backoff: Duration,
    ) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        HttpChat {
            agent: config.into(),
            endpoint,
            bearer,
            attempts: attempts.max(1),
            initial_backoff,
        }
    }

    /// POSTs the body as JSON, retrying on transport failures and non-2xx
    /// statuses with exponential backoff.
    pub fn post_json(&self, body: &Value) -> Result<Value, TransportFailure> {
        let mut backoff = self.initial_backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.attempts {
            if attempt > 1 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            let mut request = self.agent.post(&self.endpoint);
            if let Some(token) = &self.bearer {
                request = request.header("Authorization", &format!("Bearer {token}"));
            }
            match request.send_json(body) {
                Ok(mut response) => match response.body_mut().read_json::<Value>() {
                    Ok(value) => return Ok(value),
                    Err(e) => last_error = format!("invalid JSON response: {e}"),
                },
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(TransportFailure {
            attempts: self.attempts,
            message: last_error,
        })
    }
}
