//! Send one completion request to a live endpoint.
//!
//!     OPENAI_API_KEY=... cargo run --example remote_completion -- [base-url] [model]

use refprime::client::{CompletionRequest, EndpointConfig, RemoteClient};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut config = EndpointConfig::default();
    if let Some(url) = args.next() {
        config.base_url = url;
    }
    if let Some(model) = args.next() {
        config.model = model;
    }
    let client = RemoteClient::from_env(config)?;
    client.check_credentials()?;
    let prompt = "Tom talked with Bill. He was tired.\nQ: Was Tom tired?\nA:";
    let request = CompletionRequest::new(prompt, 0.2, client.config().model.clone());
    println!("{:?}", client.complete(&request)?);
    Ok(())
}
