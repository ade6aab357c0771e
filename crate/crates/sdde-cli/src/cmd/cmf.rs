use sdde::cmf::{emit_planar_vf, expand, export_json, lemma_check, pretty};
use serde::Serialize;
use serde_json::json;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::Writer;

#[derive(Clone, Debug, Serialize)]
pub struct Opts {
    pub order: usize,
    pub check_lemma: bool,
}

impl Opts {
    pub fn resolve(s: &Settings) -> Self {
        Opts {
            order: s.order.unwrap_or(2),
            check_lemma: s.check_lemma,
        }
    }
}

pub fn run(o: &Opts, w: &mut Writer) -> Result<(), CliError> {
    let exp = w.timed("expand", || expand(o.order.max(2)));
    let vf = emit_planar_vf(&exp, o.order);
    w.put_json("cmf.json", &export_json(&vf))?;
    let text = pretty(&vf);
    w.put("cmf.txt", &text)?;
    print!("{text}");
    if o.check_lemma {
        let report = lemma_check(&exp);
        let rendered = report.render();
        print!("{rendered}");
        w.put("lemma.txt", &rendered)?;
        w.put_json("lemma.json", &json!(report))?;
        if !report.passed {
            return Err(CliError::Check(
                "second-order field differs from the closed form".into(),
            ));
        }
    }
    Ok(())
}
