mod common;

use std::fs;
use std::path::Path;

use refprime::client::MockBias;
use refprime::inference::{InferenceError, SamplerConfig};
use refprime::runner::{cmd_analyze, cmd_report, cmd_run, Manifest, RunConfig, RunError};
use refprime::stimuli::Experiment;

fn mock_config(exp: Experiment, out: &Path) -> RunConfig {
    RunConfig { mock: true, seed: 21, out: out.to_path_buf(), ..RunConfig::for_experiment(exp) }
}

fn small_sampler() -> Option<SamplerConfig> {
    Some(SamplerConfig { chains: 2, iterations: 400, warmup: 200, ..Default::default() })
}

#[test]
fn e1a_mock_run_produces_full_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let config = mock_config(Experiment::E1a, dir.path());
    let summary = cmd_run(&config, false).unwrap();
    assert_eq!((summary.executed, summary.skipped, summary.records), (24, 0, 24 * (20 + 12 + 12)));
    assert_eq!(summary.exit_code(), 0);
    assert_eq!(fs::read_dir(dir.path().join("transcripts")).unwrap().count(), 24);
    assert_eq!(fs::read_dir(dir.path().join("requests")).unwrap().count(), 24);
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(config.manifest_path()).unwrap()).unwrap();
    assert_eq!(manifest.participants.len(), 24);
    assert_eq!(manifest.seeds["root"], 21);
    assert_eq!(manifest.code_version, env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest.config_sha256, config.fingerprint_hash());
}

#[test]
fn e2b_cohort_defaults_to_sixty() {
    let dir = tempfile::tempdir().unwrap();
    let summary = cmd_run(&mock_config(Experiment::E2b, dir.path()), false).unwrap();
    assert_eq!((summary.executed, summary.records), (60, 60 * (12 + 12 + 12)));
}

#[test]
fn resume_skips_completed_and_fills_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let config = mock_config(Experiment::E1a, dir.path());
    cmd_run(&config, false).unwrap();
    let original = fs::read(config.trials_path()).unwrap();

    let again = cmd_run(&config, true).unwrap();
    assert_eq!((again.executed, again.skipped), (0, 24));
    assert_eq!(fs::read(config.trials_path()).unwrap(), original);

    for id in ["E1a-p03", "E1a-p17"] {
        fs::remove_file(dir.path().join("participants").join(format!("{id}.json"))).unwrap();
    }
    let filled = cmd_run(&config, true).unwrap();
    assert_eq!((filled.executed, filled.skipped), (2, 22));
    assert_eq!(fs::read(config.trials_path()).unwrap(), original);
}

#[test]
fn existing_run_needs_resume_and_matching_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = mock_config(Experiment::E1a, dir.path());
    cmd_run(&config, false).unwrap();
    let err = cmd_run(&config, false).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let changed = RunConfig { seed: 22, ..config };
    let err = cmd_run(&changed, true).unwrap_err();
    assert!(matches!(err, RunError::Config(ref m) if m.contains("differs")), "{err}");
}

#[test]
fn manifest_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = RunConfig {
        mock_bias: MockBias { yes_rate_ambiguous: 0.6, content_accuracy: 0.9, ..Default::default() },
        ..mock_config(Experiment::E2a, a.path())
    };
    cmd_run(&config, false).unwrap();
    let replay = RunConfig { out: b.path().to_path_buf(), ..RunConfig::load(&config.manifest_path()).unwrap() };
    cmd_run(&replay, false).unwrap();
    assert_eq!(fs::read(config.trials_path()).unwrap(), fs::read(replay.trials_path()).unwrap());
    for id in ["E2a-p01", "E2a-p24"] {
        let t = |d: &Path| fs::read(d.join("transcripts").join(format!("{id}.txt"))).unwrap();
        assert_eq!(t(a.path()), t(b.path()));
    }
}

#[test]
fn bad_credentials_stop_before_any_session() {
    let dir = tempfile::tempdir().unwrap();
    let (base, server) = common::serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let key_env = "REFPRIME_RUNNER_TEST_KEY";
    std::env::set_var(key_env, "sk-wrong");
    let mut config = RunConfig { out: dir.path().to_path_buf(), ..RunConfig::default() };
    config.endpoint.base_url = base;
    config.endpoint.api_key_env = key_env.into();
    let err = cmd_run(&config, false).unwrap_err();
    assert!(matches!(err, RunError::Credentials(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert_eq!(server.join().unwrap().len(), 1);
    assert!(!dir.path().join("participants").exists());

    config.endpoint.api_key_env = "REFPRIME_RUNNER_TEST_UNSET".into();
    assert!(matches!(cmd_run(&config, false), Err(RunError::Credentials(_))));
}

#[test]
fn analysis_rejects_fully_excluded_records() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        mock_bias: MockBias { content_accuracy: 0.0, ..Default::default() },
        sampler: small_sampler(),
        ..mock_config(Experiment::E1a, dir.path())
    };
    cmd_run(&config, false).unwrap();
    let err = cmd_analyze(&config, None).unwrap_err();
    assert!(matches!(err, RunError::Inference(InferenceError::EmptyData)), "{err}");
}

#[test]
fn analysis_is_deterministic_and_report_rerenders() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig { sampler: small_sampler(), ..mock_config(Experiment::E1a, dir.path()) };
    cmd_run(&config, false).unwrap();
    let first = cmd_analyze(&config, None).unwrap();
    let md = fs::read(dir.path().join("report.md")).unwrap();
    let second = cmd_analyze(&config, None).unwrap();
    assert_eq!(first.summary, second.summary);
    assert_eq!(fs::read(dir.path().join("report.md")).unwrap(), md);
    let draws = fs::read_to_string(dir.path().join("draws.csv")).unwrap();
    assert!(draws.starts_with("chain,draw,parameter,value\n0,0,b_Intercept,"));
    assert!(!draws.contains("z_item"));

    let rerendered = cmd_report(&config, &[]).unwrap();
    assert_eq!(rerendered.coefficients.len(), 4);
    assert_eq!(fs::read(dir.path().join("report.md")).unwrap(), md);

    let other = tempfile::tempdir().unwrap();
    cmd_run(&RunConfig { seed: 5, ..mock_config(Experiment::E1a, other.path()) }, false).unwrap();
    let compared = cmd_report(&config, &[other.path().to_path_buf()]).unwrap();
    assert_eq!(compared.levene.len(), 1);
}
