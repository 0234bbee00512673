use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aniso(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso"))
        .current_dir(dir)
        .env_remove("ANISO_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn empty_config_lists_required_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "empty.toml", "");
    let o = aniso(tmp.path(), &["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("required fields: u, v, weight, family"), "{err}");
}

#[test]
fn unknown_key_reports_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "seed = 1\n\n[domains]\nshapes = [\"rect(0,1)\"]\nsss = [2.0]\n");
    let o = aniso(tmp.path(), &["domains", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("sss"), "{err}");
}

#[test]
fn bad_weight_expression_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "w.toml", "[norms]\nweight = \"product_bessel(1)\"\nfamily = [\"gaussian\"]\n");
    let o = aniso(tmp.path(), &["norms", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn constants_sweep_to_twelve() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aniso(tmp.path(), &["constants", "--d-max", "12", "--out", "res"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("res/constants");
    let curse = fs::read_to_string(dir.join("curse.csv")).unwrap();
    assert_eq!(curse.lines().count(), 13);
    assert!(curse.starts_with("d,n,kappa,c_inverse,computed,bound,within_bound"));
    let ledger = fs::read_to_string(dir.join("ledger.csv")).unwrap();
    assert!(ledger.lines().any(|l| l.starts_with("C_total,")));
    assert!(dir.join("curse.png").exists());
    assert!(fs::read_to_string(dir.join("VERSION")).unwrap().starts_with("aniso "));
    assert!(fs::read_to_string(dir.join("config.toml")).unwrap().contains("[grid]"));
    assert_eq!(summary(&dir)["all_pass"], true);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_aniso"))
        .current_dir(tmp.path())
        .env("ANISO_OUT", "from-env")
        .args(["constants", "--d-max", "3"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from-env/constants/summary.json").exists());
}

#[test]
fn config_is_copied_verbatim() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "# comment kept\n[domains]\nshapes = [\"rect(-1,1)\", \"ball(0,0;1)\"]\ns = [1.5, 2.0]\n";
    let cfg = write(tmp.path(), "d.toml", text);
    let o = aniso(tmp.path(), &["domains", "--config", &cfg, "--out", "res"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("res/domains");
    assert_eq!(fs::read_to_string(dir.join("config.toml")).unwrap(), text);
    let rows = fs::read_to_string(dir.join("domains.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    let s = summary(&dir);
    let checks = s["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true), "{checks:?}");
}

const TRAIN: &str = "[train]\nmodel = \"two_block\"\nbudget = 21\n\n[train.protocol]\nsteps = 50\nquad_intervals = 8\nsingle_degree = 2\ntwo_block_degrees = [1, 2]\noptimizer = { kind = \"adam\", lr = 0.01, beta1 = 0.9, beta2 = 0.999, eps = 1e-8 }\n";

#[test]
fn training_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "t.toml", TRAIN);
    for out in ["a", "b"] {
        let o = aniso(tmp.path(), &["train", "--config", &cfg, "--out", out, "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(tmp.path().join("a/train/loss_trace.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/train/loss_trace.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "step,seed,model,budget,loss,smoothed");
    assert_eq!(text.lines().count(), 52);
    assert!(text.lines().nth(1).unwrap().starts_with("0,7,two_block,21,"));
}

#[test]
fn train_needs_width_or_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "t.toml", "[train]\nmodel = \"single_block\"\n");
    let o = aniso(tmp.path(), &["train", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unconverged_norm_needs_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[grid]\nwindow = [-4.0, 4.0]\nladder = [8, 16]\n\n[norms]\nweight = \"product_bessel(6,6)\"\nfamily = [\"gaussian\"]\n";
    let cfg = write(tmp.path(), "n.toml", text);
    let o = aniso(tmp.path(), &["norms", "--config", &cfg, "--out", "res"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = aniso(tmp.path(), &["norms", "--config", &cfg, "--out", "res", "--allow-unconverged"]);
    assert!(o.status.success());
    assert!(!summary(&tmp.path().join("res/norms"))["unconverged"].as_array().unwrap().is_empty());
}

#[test]
fn norms_table_on_a_resolved_gaussian() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[grid]\nladder = [64, 128]\n\n[norms]\nweight = \"product_bessel(1,1)\"\nfamily = [\"gaussian\", \"mixture\"]\ndraws = 2\n";
    let cfg = write(tmp.path(), "n.toml", text);
    let o = aniso(tmp.path(), &["norms", "--config", &cfg, "--out", "res", "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("res/norms");
    // 3 functions × 2 grids × (1 Barron + 2 exponents × 4 norms)
    assert_eq!(fs::read_to_string(dir.join("norms.csv")).unwrap().lines().count(), 1 + 3 * 2 * 9);
    assert!(dir.join("norms.png").exists());
    assert_eq!(summary(&dir)["all_pass"], true);
}

#[test]
fn verify_sweep_writes_one_row_per_report() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[grid]\nladder = [64, 128]\n\n[verify]\nu = \"rect(-1,1)\"\nv = \"rect(-0.5,1)\"\nweight = \"product_bessel(1,2)\"\nfamily = [\"gaussian\"]\nsobolev_order = [1, 2]\nhigh_p = [[2.0, 2.0]]\nhigh_t = [1.0]\nlow_p = [2.0]\nlow_t = [[1.0, 1.0]]\nrandom_draws = 5\n";
    let cfg = write(tmp.path(), "v.toml", text);
    let o = aniso(tmp.path(), &["verify", "--config", &cfg, "--out", "res"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("res/verify");
    assert_eq!(fs::read_to_string(dir.join("reports.csv")).unwrap().lines().count(), 1 + 1 + 1 + 5 + 5);
    let s = summary(&dir);
    assert_eq!(s["all_pass"], true, "{s}");
    assert!(s["info"]["max_ratio"]["mixed_holder"].as_f64().unwrap() <= 1.0 + 1e-6);
}

#[test]
fn reproduce_and_rate_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let proto = "steps = 20\nquad_intervals = 8\nsingle_degree = 2\ntwo_block_degrees = [1, 2]\noptimizer = { kind = \"adam\", lr = 0.01, beta1 = 0.9, beta2 = 0.999, eps = 1e-8 }\n";
    let text = format!(
        "[reproduce]\nbudgets = [21, 41]\nseeds = 2\ntrace_every = 5\ncontour_points = 9\n\n[reproduce.protocol]\n{proto}\n[rate]\nwidths = [2, 4, 8, 16]\nrestarts = 1\n\n[rate.protocol]\n{proto}"
    );
    let cfg = write(tmp.path(), "r.toml", &text);
    let o = aniso(tmp.path(), &["reproduce-paper", "--config", &cfg, "--out", "res"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("res/reproduce-paper");
    for f in ["loss_trace.csv", "contour.csv", "verdicts.csv", "loss_band_21.png", "loss_band_41.png", "contour_phi2.png"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    // 2 budgets × 2 models × 2 seeds × steps 0, 5, 10, 15, 20
    assert_eq!(fs::read_to_string(dir.join("loss_trace.csv")).unwrap().lines().count(), 1 + 8 * 5);
    let contour = fs::read_to_string(dir.join("contour.csv")).unwrap();
    assert_eq!(contour.lines().next().unwrap(), "t,x,f,phi1,phi2,dx_f,dx_phi1,dx_phi2");
    assert_eq!(contour.lines().count(), 82);
    let checks = summary(&dir)["checks"].as_array().unwrap().len();
    assert_eq!(checks, 3);

    let o = aniso(tmp.path(), &["rate", "--config", &cfg, "--out", "res"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rate = fs::read_to_string(tmp.path().join("res/rate/rate.csv")).unwrap();
    assert_eq!(rate.lines().count(), 5);
}
