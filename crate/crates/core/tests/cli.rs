use std::path::Path;
use std::process::{Command, Output};

use fwrl::harness::RESULTS_HEADER;

fn fwrl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwrl")).args(args).current_dir(cwd).env_remove("FWRL_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn maps_lists_bundled_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let out = fwrl(&["maps", "--show"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["four_room", "windy_four_room", "h_maze"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("#########"));
}

#[test]
fn run_writes_results_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("small.cfg"),
        "agents = QL, FWRL\nepisodes = 3\nseeds = 1, 2\nsteps_per_episode = 50\n",
    )
    .unwrap();
    for out_dir in ["a", "b"] {
        let out = fwrl(&["run", "--config", "small.cfg", "--out", out_dir], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().next(), Some(RESULTS_HEADER));
    assert_eq!(a.lines().count(), 1 + 2 * 2 * 3);
    for f in ["summary.json", "curves.svg", "dist_ineff.svg"] {
        assert!(dir.path().join("a").join(f).exists(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    for key in ["median_reward_last20", "efficiency_index", "mean_dist_ineff"] {
        assert!(summary["FWRL"].get(key).is_some(), "{key} missing");
    }
}

#[test]
fn seed_override_and_output_dir_fallbacks() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), "agent = QL\nepisodes = 1\nseeds = 1, 2, 3\noutput_dir = from_config\n")
        .unwrap();
    let out = fwrl(&["run", "--config", "c.cfg", "--seed-override", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("from_config/results.csv")).unwrap();
    assert_eq!(csv.lines().skip(1).collect::<Vec<_>>().len(), 1);
    assert!(csv.lines().nth(1).unwrap().starts_with("QL,9,1,"));

    std::fs::write(dir.path().join("d.cfg"), "agent = QL\nepisodes = 1\nseeds = 4\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fwrl"))
        .args(["run", "--config", "d.cfg"])
        .current_dir(dir.path())
        .env("FWRL_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/results.csv").exists());
}

#[test]
fn bad_config_reports_line_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "episodes = 3\nepsilon = lots\n").unwrap();
    let out = fwrl(&["run", "--config", "bad.cfg"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("epsilon"), "{err}");

    std::fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let out = fwrl(&["run", "--config", "bad.cfg"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn scenario_and_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = fwrl(&["scenario", "--out", "sc"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("FWRL   reached in 6 steps"), "{text}");
    assert!(text.contains("QLCAT  did not reach"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sc/scenario.json")).unwrap()).unwrap();
    assert_eq!(report["oracle_test_steps"], 6);
    assert!(dir.path().join("sc/heatmap.svg").exists());

    let out = fwrl(
        &["plot", "--snapshot", "sc/snapshots/fwrl_test.csv", "--map", "h_maze", "--goal", "4,4", "--out", "hm"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("hm/fwrl_test.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="free""#).count(), 19);

    std::fs::write(dir.path().join("small.cfg"), "agent = FWRL\nepisodes = 2\nseeds = 1\n").unwrap();
    assert!(fwrl(&["run", "--config", "small.cfg", "--out", "r"], dir.path()).status.success());
    let before = std::fs::read_to_string(dir.path().join("r/curves.svg")).unwrap();
    let out = fwrl(&["plot", "--results", "r", "--out", "p"], dir.path());
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("p/curves.svg")).unwrap(), before);
}
