//! Field dumps for external plotting: node coordinates plus components.
//!
//! CSV has a header row `x0,…,active,c0,…`. The binary form starts with one
//! ASCII header line
//! `randers-foliate-dump 1 field=NAME dim=D sizes=N0xN1 ncomp=K\n`
//! followed by one record per node of `D + K` little-endian `f64`s
//! (coordinates, then components). Excised nodes carry NaN components.

use std::io::{self, Write};

use randers_foliate_core::extrinsic::{build_bundle, NodeExtrinsic};
use randers_foliate_core::grid::{extrinsic_bar, volume_density, FoliatedRandersManifold, Scheme, Volume};
use randers_foliate_core::Result;

pub const FIELDS: &[(&str, &str)] = &[
    ("a", "base metric a_ij, row-major"),
    ("beta", "1-form β_i"),
    ("normal", "a-unit normal N^i of the leaves"),
    ("c", "c = √(1 − ‖β^{♯⊤}‖²)"),
    ("chat", "ĉ = c + β(N)"),
    ("beta-normal", "β(N)"),
    ("delta", "δ = −½c⁻¹ĉ⁻²n(cĉ)"),
    ("zbar", "Z̄ = ∇̄_N N in coordinates"),
    ("mean-curvature-bar", "tr Ā"),
    ("mean-curvature", "tr A, the Finsler mean curvature"),
    ("density-f", "Busemann–Hausdorff density relative to coordinates"),
];

pub struct Dump {
    pub name: String,
    pub ncomp: usize,
    /// `ncomp` values per node, NaN where the field is undefined.
    pub values: Vec<f64>,
}

fn per_node(m: &FoliatedRandersManifold, scheme: Scheme, f: impl Fn(&NodeExtrinsic) -> f64) -> Result<Vec<f64>> {
    let bundle = build_bundle(m, extrinsic_bar(m, scheme)?)?;
    Ok(bundle
        .nodes
        .iter()
        .zip(m.active())
        .map(|(n, &act)| match n {
            Some(n) if act => f(n),
            _ => f64::NAN,
        })
        .collect())
}

/// Evaluates the named field; `None` for an unknown name.
pub fn field(m: &FoliatedRandersManifold, scheme: Scheme, name: &str) -> Option<Result<Dump>> {
    let coord = |t: &randers_foliate_core::grid::TensorField| Ok(Dump {
        name: name.to_string(),
        ncomp: t.ncomp(),
        values: t.values().to_vec(),
    });
    let scalar = |f: fn(&NodeExtrinsic) -> f64| {
        per_node(m, scheme, f).map(|values| Dump {
            name: name.to_string(),
            ncomp: 1,
            values,
        })
    };
    Some(match name {
        "a" => coord(&m.a),
        "beta" => coord(&m.beta),
        "normal" => coord(&m.big_n),
        "c" => scalar(|n| n.c()),
        "chat" => scalar(|n| n.chat()),
        "beta-normal" => scalar(|n| n.nd.beta_n()),
        "delta" => scalar(|n| n.delta),
        "mean-curvature-bar" => scalar(|n| n.abar.trace()),
        "mean-curvature" => scalar(|n| n.a_full().trace()),
        "zbar" => extrinsic_bar(m, scheme).and_then(|bar| coord(&bar.zbar)),
        "density-f" => (0..m.grid.len())
            .map(|i| {
                if m.active()[i] {
                    volume_density(m, i, Volume::F)
                } else {
                    Ok(f64::NAN)
                }
            })
            .collect::<Result<Vec<f64>>>()
            .map(|values| Dump {
                name: name.to_string(),
                ncomp: 1,
                values,
            }),
        _ => return None,
    })
}

pub fn write_csv<W: Write>(m: &FoliatedRandersManifold, dump: &Dump, w: W) -> csv::Result<()> {
    let d = m.dim();
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push("active".into());
    header.extend((0..dump.ncomp).map(|k| format!("c{k}")));
    wr.write_record(&header)?;
    for node in 0..m.grid.len() {
        let mut row: Vec<String> = m.grid.coords(node).iter().map(|x| format!("{x:e}")).collect();
        row.push(if m.active()[node] { "1" } else { "0" }.into());
        row.extend(
            dump.values[node * dump.ncomp..(node + 1) * dump.ncomp]
                .iter()
                .map(|v| format!("{v:e}")),
        );
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(m: &FoliatedRandersManifold, dump: &Dump, mut w: W) -> io::Result<()> {
    let sizes: Vec<String> = m.grid.sizes().iter().map(|n| n.to_string()).collect();
    writeln!(
        w,
        "randers-foliate-dump 1 field={} dim={} sizes={} ncomp={}",
        dump.name,
        m.dim(),
        sizes.join("x"),
        dump.ncomp
    )?;
    for node in 0..m.grid.len() {
        for x in m.grid.coords(node) {
            w.write_all(&x.to_le_bytes())?;
        }
        for v in &dump.values[node * dump.ncomp..(node + 1) * dump.ncomp] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}
