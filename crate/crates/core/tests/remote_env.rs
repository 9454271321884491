//! Environment-driven oracle configuration. Kept in its own test binary
//! because it mutates process-wide variables.

use std::time::Duration;

use trepac::oracle::RemoteConfig;
use trepac::Error;

#[test]
fn config_reads_environment() {
    std::env::set_var("ORACLE_URL", "http://127.0.0.1:9/");
    std::env::set_var("ORACLE_TIMEOUT_SECS", "2.5");
    std::env::set_var("ORACLE_BATCH", "8");
    let c = RemoteConfig::from_env("bert-base-cased").unwrap();
    assert_eq!(c.endpoint, "http://127.0.0.1:9");
    assert_eq!(c.timeout, Duration::from_millis(2500));
    assert_eq!(c.batch_size, 8);
    std::env::set_var("ORACLE_BATCH", "many");
    assert!(matches!(RemoteConfig::from_env("m"), Err(Error::Config(_))));
    for v in ["ORACLE_URL", "ORACLE_TIMEOUT_SECS", "ORACLE_BATCH"] {
        std::env::remove_var(v);
    }
}
