use std::path::PathBuf;

use proptest::prelude::*;
use randers_foliate::config::parse_param_flag;
use randers_foliate::{Format, RawConfig, RunConfig};
use randers_foliate_core::grid::{ExampleKind, Scheme};
use randers_foliate_core::verify::Formula;

fn opt_value() -> impl Strategy<Value = Option<String>> {
    prop::option::of("[a-z0-9,._-]{1,12}")
}

fn raw() -> impl Strategy<Value = RawConfig> {
    (
        opt_value(),
        opt_value(),
        opt_value(),
        opt_value(),
        opt_value(),
        prop::collection::btree_map("[a-z_]{1,6}", "[0-9.]{1,5}", 0..3),
    )
        .prop_map(|(example, res, formulas, scheme, seed, params)| RawConfig {
            example,
            res,
            formulas,
            scheme,
            seed,
            params,
            ..Default::default()
        })
}

fn render(raw: &RawConfig) -> String {
    let mut s = String::from("# generated\n\n");
    let fields = [
        ("example", &raw.example),
        ("res", &raw.res),
        ("formulas", &raw.formulas),
        ("scheme", &raw.scheme),
        ("seed", &raw.seed),
    ];
    for (k, v) in fields {
        if let Some(v) = v {
            s.push_str(&format!("  {k} =  {v}   # trailing\n"));
        }
    }
    for (k, v) in &raw.params {
        s.push_str(&format!("param.{k} = {v}\n"));
    }
    s
}

proptest! {
    #[test]
    fn set_flags_win_and_unset_flags_fall_through(file in raw(), flags in raw()) {
        let merged = file.clone().overridden_by(flags.clone());
        prop_assert_eq!(&merged.example, if flags.example.is_some() { &flags.example } else { &file.example });
        prop_assert_eq!(&merged.res, if flags.res.is_some() { &flags.res } else { &file.res });
        prop_assert_eq!(&merged.seed, if flags.seed.is_some() { &flags.seed } else { &file.seed });
        for (k, v) in &merged.params {
            let want = flags.params.get(k).or_else(|| file.params.get(k)).unwrap();
            prop_assert_eq!(v, want);
        }
        prop_assert_eq!(merged.params.len(), file.params.keys().chain(flags.params.keys()).collect::<std::collections::BTreeSet<_>>().len());
    }

    #[test]
    fn config_files_round_trip(r in raw()) {
        let parsed = RawConfig::parse_file_contents(&render(&r), "test").unwrap();
        prop_assert_eq!(parsed, r);
    }

    #[test]
    fn param_flags_split_at_the_first_equals(k in "[a-z_]{1,8}", v in "[0-9.=]{0,6}") {
        let (pk, pv) = parse_param_flag(&format!("{k}={v}")).unwrap();
        prop_assert_eq!(pk, k);
        prop_assert_eq!(pv, v);
    }
}

#[test]
fn defaults_come_from_the_catalog() {
    let cfg = RunConfig::from_raw(RawConfig {
        example: Some("sphere-latitudes".into()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(cfg.example.kind, ExampleKind::SphereLatitudes);
    assert_eq!(cfg.resolutions, vec![256]);
    assert_eq!(cfg.formulas, Formula::ALL.to_vec());
    assert_eq!(cfg.scheme, Scheme::Spectral);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.jobs, None);
    assert_eq!(cfg.format, Format::Json);
}

#[test]
fn format_follows_the_extension_unless_given() {
    let base = RawConfig {
        example: Some("flat-graph".into()),
        out: Some(PathBuf::from("r.csv")),
        ..Default::default()
    };
    assert_eq!(RunConfig::from_raw(base.clone()).unwrap().format, Format::Csv);
    let forced = RawConfig { format: Some("json".into()), ..base };
    assert_eq!(RunConfig::from_raw(forced).unwrap().format, Format::Json);
}

#[test]
fn invalid_values_are_config_errors() {
    let with = |f: fn(&mut RawConfig)| {
        let mut r = RawConfig {
            example: Some("flat-graph".into()),
            ..Default::default()
        };
        f(&mut r);
        RunConfig::from_raw(r)
    };
    assert!(with(|r| r.res = Some("64,x".into())).is_err());
    assert!(with(|r| r.res = Some("7".into())).is_err());
    assert!(with(|r| r.seed = Some("-1".into())).is_err());
    assert!(with(|r| r.jobs = Some("0".into())).is_err());
    assert!(with(|r| {
        r.params.insert("amp".into(), "big".into());
    })
    .is_err());
    assert!(with(|r| r.res = Some("16, 32".into())).is_ok());
}
