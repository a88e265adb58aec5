use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::samples::GenSample;
use crate::corpus::join_tokens;
use crate::service::{Reply, ServiceClient, ServiceConfig};
use crate::{Error, Result};

/// Produces an FAQ token sequence for a sample.
pub trait Generator: Sync {
    fn generate(&self, sample: &GenSample) -> Result<Vec<String>>;
}

/// Returns one of the sample's input questions, picked uniformly with a
/// stream derived from `(seed, sample.key)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineGenerator {
    pub seed: u64,
}

impl BaselineGenerator {
    pub fn new(seed: u64) -> Self {
        BaselineGenerator { seed }
    }

    pub fn pick(&self, sample: &GenSample) -> Result<usize> {
        if sample.inputs.is_empty() {
            return Err(Error::InvalidInput("sample has no inputs".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, sample.key));
        Ok(rng.gen_range(0..sample.inputs.len()))
    }
}

impl Generator for BaselineGenerator {
    fn generate(&self, sample: &GenSample) -> Result<Vec<String>> {
        Ok(sample.inputs[self.pick(sample)?].clone())
    }
}

/// One training example sent to a model service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPair {
    pub source: String,
    pub target: String,
}

impl TrainPair {
    pub fn from_sample(s: &GenSample) -> Self {
        TrainPair {
            source: s.input_text(),
            target: join_tokens(&s.target),
        }
    }
}

/// A sequence-to-sequence model living behind some service.
pub trait ModelService: Sync {
    /// Identity used in error messages.
    fn endpoint(&self) -> String;

    /// Trains a model, optionally continuing from `init_from`, and returns
    /// its id. Services that cannot continue training answer with
    /// [`Error::Unsupported`].
    fn train(&self, dataset: &[TrainPair], validation: &[TrainPair], init_from: Option<&str>) -> Result<String>;

    fn generate(&self, model_id: &str, sequence: &str) -> Result<Vec<String>>;
}

#[derive(Serialize)]
struct TrainRequest<'a> {
    dataset: &'a [TrainPair],
    validation: &'a [TrainPair],
    #[serde(skip_serializing_if = "Option::is_none")]
    init_from: Option<&'a str>,
}

#[derive(Deserialize)]
struct TrainResponse {
    model_id: String,
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model_id: &'a str,
    sequence: &'a str,
}

#[derive(Deserialize)]
struct GenerateResponse {
    tokens: Vec<String>,
}

/// JSON client for `POST /train` and `POST /generate`.
#[derive(Debug, Clone)]
pub struct HttpModelService {
    client: ServiceClient,
}

impl HttpModelService {
    pub fn new(config: ServiceConfig) -> Self {
        HttpModelService {
            client: ServiceClient::new(config),
        }
    }
}

impl ModelService for HttpModelService {
    fn endpoint(&self) -> String {
        self.client.config().base_url.clone()
    }

    fn train(&self, dataset: &[TrainPair], validation: &[TrainPair], init_from: Option<&str>) -> Result<String> {
        let req = TrainRequest {
            dataset,
            validation,
            init_from,
        };
        match self.client.post_json_status::<_, TrainResponse>("/train", &req)? {
            Reply::Ok(r) => Ok(r.model_id),
            Reply::Status(501, _) if init_from.is_some() => Err(Error::Unsupported {
                endpoint: self.client.endpoint("/train"),
                feature: "init_from".into(),
            }),
            Reply::Status(code, body) => Err(Error::Service {
                endpoint: self.client.endpoint("/train"),
                message: format!("http status {code}: {}", body.trim()),
            }),
        }
    }

    fn generate(&self, model_id: &str, sequence: &str) -> Result<Vec<String>> {
        let r: GenerateResponse = self
            .client
            .post_json("/generate", &GenerateRequest { model_id, sequence })?;
        Ok(r.tokens)
    }
}

/// Asks a trained service model for each sample's output. The token list
/// comes back verbatim; errors are never papered over.
pub struct ExternalGenerator<'a> {
    pub service: &'a dyn ModelService,
    pub model_id: String,
}

impl<'a> ExternalGenerator<'a> {
    pub fn new(service: &'a dyn ModelService, model_id: impl Into<String>) -> Self {
        ExternalGenerator {
            service,
            model_id: model_id.into(),
        }
    }
}

impl Generator for ExternalGenerator<'_> {
    fn generate(&self, sample: &GenSample) -> Result<Vec<String>> {
        self.service.generate(&self.model_id, &sample.input_text())
    }
}

/// Wraps a plain function as a generator.
pub struct FnGenerator<F>(pub F);

impl<F> Generator for FnGenerator<F>
where
    F: Fn(&GenSample) -> Result<Vec<String>> + Sync,
{
    fn generate(&self, sample: &GenSample) -> Result<Vec<String>> {
        (self.0)(sample)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn sample(n: usize, key: u64) -> GenSample {
        GenSample {
            inputs: (0..n).map(|i| vec![format!("w{i}")]).collect(),
            input_ids: (0..n).map(|i| format!("u{i}")).collect(),
            target: vec!["t".into()],
            references: vec![vec!["t".into()]],
            topic: None,
            key,
        }
    }

    #[test]
    fn single_input_returned() {
        let s = sample(1, 3);
        assert_eq!(BaselineGenerator::new(9).generate(&s).unwrap(), s.inputs[0]);
    }

    #[test]
    fn output_is_an_input() {
        let s = sample(7, 1);
        for seed in 0..50 {
            let out = BaselineGenerator::new(seed).generate(&s).unwrap();
            assert!(s.inputs.contains(&out));
        }
    }

    #[test]
    fn deterministic_per_sample() {
        let g = BaselineGenerator::new(4);
        let a: Vec<usize> = (0..20).map(|k| g.pick(&sample(5, k)).unwrap()).collect();
        let b: Vec<usize> = (0..20).map(|k| g.pick(&sample(5, k)).unwrap()).collect();
        assert_eq!(a, b);
        assert!(a.iter().any(|&i| i != a[0]));
    }

    #[test]
    fn fixed_output_tokenizes() {
        let g = FnGenerator(|_: &GenSample| Ok(tokenize("How can I get tested?")));
        assert_eq!(
            g.generate(&sample(1, 0)).unwrap(),
            vec!["how", "can", "i", "get", "tested", "?"]
        );
    }
}
