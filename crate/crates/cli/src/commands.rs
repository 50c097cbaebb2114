use std::fmt::Write as _;
use std::path::Path;

use posg_fsc::chain::{compose_gmc, evaluate, qualitative_witness, GlobalChain, RecurrenceAnalysis};
use posg_fsc::controller::{parse_fsc, softmax_policy, uniform_policy, Agent, Fsc, FscDoc, FscStructure};
use posg_fsc::dot;
use posg_fsc::dra::{parse_dra_json, PairDoc, RabinAutomaton};
use posg_fsc::grid::{make_grid_posg, GridSpec};
use posg_fsc::ltl::{eval_lasso, parse_ltl};
use posg_fsc::maxmin::{maxmin_select, MaxMinOptions};
use posg_fsc::optimize::{optimize_parameters, OptimizeOptions};
use posg_fsc::posg::{parse_posg_json, Posg};
use posg_fsc::product::{build_product, parse_product, parse_product_json, ProductDoc, ProductPosg};
use posg_fsc::simulation::estimate_with;
use posg_fsc::synthesis::{seed_structures, Candidate};
use posg_fsc::word::{letter_label, LassoWord};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, InputContext};
use crate::report::{write_json, Inputs};
use crate::{
    AnalyzeArgs, ComposeArgs, ControllerInputs, ExportDotArgs, GridArgs, MaxminArgs, OptimizeArgs, ProductArgs,
    SimulateArgs, SynthesizeArgs, ValidateArgs,
};

pub struct Outcome {
    pub result: Value,
    pub text: String,
}

type CmdResult = Result<Outcome, CliError>;

/// Lasso words checked by `product --ltl`: prefixes up to 2 letters, cycles up to 2.
const LTL_CHECK_PREFIX: usize = 2;
const LTL_CHECK_CYCLE: usize = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateDoc {
    pub def: FscDoc,
    pub adv: FscDoc,
    pub scc: Vec<usize>,
    pub pair: usize,
    pub bad: Vec<usize>,
    pub good: Vec<usize>,
    pub witness_class: Vec<usize>,
}

/// Output of `synthesize`: the product it ran on, and each candidate pair as
/// uniform controllers over its structures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatesDoc {
    pub product: ProductDoc,
    pub g_def: usize,
    pub g_adv: usize,
    pub narrow: bool,
    pub stats: Value,
    pub candidates: Vec<CandidateDoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainDoc {
    pub product_states: usize,
    pub def_nodes: usize,
    pub adv_nodes: usize,
    pub initial: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub pairs: Vec<PairDoc>,
}

fn load_model(inputs: &mut Inputs, path: &Path) -> Result<Posg, CliError> {
    let (text, _) = inputs.json(path)?;
    parse_posg_json(&text).at(path)
}

fn load_product(inputs: &mut Inputs, path: &Path) -> Result<ProductPosg, CliError> {
    let (text, _) = inputs.json(path)?;
    parse_product_json(&text).at(path)
}

fn names_for(game: &Posg, agent: Agent) -> (&[String], &[String]) {
    match agent {
        Agent::Defender => (game.def_observations(), game.def_actions()),
        Agent::Adversary => (game.adv_observations(), game.adv_actions()),
    }
}

fn fsc_from_doc(doc: &FscDoc, game: &Posg, agent: Agent, path: &Path) -> Result<Fsc, CliError> {
    if doc.agent != agent {
        return Err(CliError::Usage(format!(
            "{}: expected a controller for the {agent}, found one for the {}",
            path.display(),
            doc.agent
        )));
    }
    let (obs, acts) = names_for(game, agent);
    parse_fsc(doc, obs, acts).at(path)
}

fn load_fsc(inputs: &mut Inputs, path: &Path, game: &Posg, agent: Agent) -> Result<Fsc, CliError> {
    let (_, value) = inputs.json(path)?;
    let doc: FscDoc = serde_json::from_value(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fsc_from_doc(&doc, game, agent, path)
}

fn load_all(inputs: &mut Inputs, c: &ControllerInputs) -> Result<(ProductPosg, Fsc, Fsc), CliError> {
    let p = load_product(inputs, &c.product)?;
    let cd = load_fsc(inputs, &c.fsc_def, p.game(), Agent::Defender)?;
    let ca = load_fsc(inputs, &c.fsc_adv, p.game(), Agent::Adversary)?;
    Ok((p, cd, ca))
}

fn fsc_doc(c: &Fsc, game: &Posg) -> FscDoc {
    let (obs, acts) = names_for(game, c.structure().agent());
    FscDoc::from_fsc(c, obs, acts)
}

fn load_candidates(inputs: &mut Inputs, path: &Path) -> Result<(ProductPosg, Vec<Candidate>, CandidatesDoc), CliError> {
    let (_, value) = inputs.json(path)?;
    let doc: CandidatesDoc = serde_json::from_value(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let p = parse_product(&doc.product).at(path)?;
    let candidates = doc
        .candidates
        .iter()
        .map(|c| {
            Ok(Candidate {
                def: fsc_from_doc(&c.def, p.game(), Agent::Defender, path)?
                    .structure()
                    .clone(),
                adv: fsc_from_doc(&c.adv, p.game(), Agent::Adversary, path)?
                    .structure()
                    .clone(),
                scc: c.scc.clone(),
                pair: c.pair,
                bad: c.bad.clone(),
                good: c.good.clone(),
                witness_class: c.witness_class.clone(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((p, candidates, doc))
}

pub fn grid(a: &GridArgs) -> CmdResult {
    let spec = GridSpec {
        m: a.m,
        n: a.n,
        unsafe_state: a.unsafe_state,
        goal: a.goal,
        p_obs_def: a.p_obs_def,
        p_obs_adv: a.p_obs_adv,
        p_move: a.p_move,
        p_move_attacked: a.p_move_attacked,
    };
    let g = make_grid_posg(&spec)?;
    write_json(&a.output, &g.to_doc())?;
    Ok(Outcome {
        result: json!({ "spec": spec, "states": g.states(), "output": a.output }),
        text: format!("wrote {}-state grid game to {}\n", g.states(), a.output.display()),
    })
}

pub fn validate(a: &ValidateArgs, inputs: &mut Inputs) -> CmdResult {
    let mut checked = Vec::new();
    let mut text = String::new();
    let mut note = |kind: &str, path: &Path, summary: String| {
        let _ = writeln!(text, "{kind} {}: ok ({summary})", path.display());
        checked.push(json!({ "kind": kind, "path": path, "summary": summary }));
    };
    let mut game = None;
    if let Some(path) = &a.model {
        let g = load_model(inputs, path)?;
        note("model", path, format!("{} states", g.states()));
        game = Some(g);
    }
    if let Some(path) = &a.dra {
        let (text, _) = inputs.json(path)?;
        let d = parse_dra_json(&text).at(path)?;
        note("dra", path, format!("{} states, {} pairs", d.states(), d.pairs().len()));
    }
    if let Some(path) = &a.product {
        let p = load_product(inputs, path)?;
        note(
            "product",
            path,
            format!("{} states, {} pairs", p.states(), p.pairs().len()),
        );
        game = Some(p.game().clone());
    }
    for (path, agent) in [(&a.fsc_def, Agent::Defender), (&a.fsc_adv, Agent::Adversary)] {
        let Some(path) = path else { continue };
        let g = game
            .as_ref()
            .ok_or_else(|| CliError::Usage("controllers are checked against --model or --product".into()))?;
        let c = load_fsc(inputs, path, g, agent)?;
        note("fsc", path, format!("{agent}, {} nodes", c.structure().nodes()));
    }
    if let Some(path) = &a.candidates {
        let (_, candidates, _) = load_candidates(inputs, path)?;
        note("candidates", path, format!("{} candidates", candidates.len()));
    }
    if checked.is_empty() {
        return Err(CliError::Usage("nothing to validate; pass at least one file".into()));
    }
    Ok(Outcome {
        result: json!({ "checked": checked }),
        text,
    })
}

fn describe_word(w: &LassoWord, ap: &[String]) -> String {
    let show = |ls: &[posg_fsc::word::Letter]| ls.iter().map(|&l| letter_label(l, ap)).collect::<Vec<_>>().join(" ");
    format!("prefix [{}] cycle [{}]", show(w.prefix()), show(w.cycle()))
}

pub fn product(a: &ProductArgs, inputs: &mut Inputs) -> CmdResult {
    let g = load_model(inputs, &a.model)?;
    let dra = match &a.dra {
        Some(path) => {
            let (text, _) = inputs.json(path)?;
            parse_dra_json(&text).at(path)?
        }
        None => RabinAutomaton::reach_avoid_recurrence(),
    };
    let mut checked_words = None;
    if let Some(text) = &a.ltl {
        let f = parse_ltl(text, dra.ap())?;
        let words = LassoWord::enumerate(dra.ap().len(), LTL_CHECK_PREFIX, LTL_CHECK_CYCLE);
        for w in &words {
            if dra.accepts_lasso(w)? != eval_lasso(&f, dra.ap(), w)? {
                return Err(CliError::LtlMismatch(describe_word(w, dra.ap())));
            }
        }
        checked_words = Some(words.len());
    }
    let mut p = build_product(&g, &dra)?;
    let full = p.states();
    if a.prune_unreachable {
        p = p.prune_unreachable();
    }
    write_json(&a.output, &p.to_doc())?;
    let mut text = format!(
        "wrote {}-state product ({} before pruning, {} pairs) to {}\n",
        p.states(),
        full,
        p.pairs().len(),
        a.output.display()
    );
    if let Some(n) = checked_words {
        let _ = writeln!(text, "automaton agrees with the formula on {n} lasso words");
    }
    Ok(Outcome {
        result: json!({
            "states": p.states(),
            "unpruned_states": full,
            "automaton_states": dra.states(),
            "pairs": p.pairs().len(),
            "ltl_words_checked": checked_words,
            "output": a.output,
        }),
        text,
    })
}

fn composed(p: &ProductPosg, cd: &Fsc, ca: &Fsc) -> Result<GlobalChain, CliError> {
    let chain = compose_gmc(p, cd, ca)?;
    chain.validate().into_result()?;
    Ok(chain)
}

pub fn compose(a: &ComposeArgs, inputs: &mut Inputs) -> CmdResult {
    let (p, cd, ca) = load_all(inputs, &a.inputs)?;
    let chain = composed(&p, &cd, &ca)?;
    let doc = ChainDoc {
        product_states: chain.product_states(),
        def_nodes: chain.def_nodes(),
        adv_nodes: chain.adv_nodes(),
        initial: chain.initial(),
        rows: (0..chain.states()).map(|m| chain.row(m).to_vec()).collect(),
        pairs: chain.pairs().iter().map(|pr| pr.to_doc()).collect(),
    };
    write_json(&a.output, &doc)?;
    let transitions: usize = doc.rows.iter().map(Vec::len).sum();
    Ok(Outcome {
        result: json!({ "states": chain.states(), "transitions": transitions, "output": a.output }),
        text: format!(
            "wrote {}-state chain ({transitions} transitions) to {}\n",
            chain.states(),
            a.output.display()
        ),
    })
}

pub fn analyze(a: &AnalyzeArgs, inputs: &mut Inputs) -> CmdResult {
    let (p, cd, ca) = load_all(inputs, &a.inputs)?;
    composed(&p, &cd, &ca)?;
    let ev = evaluate(&p, &cd, &ca, a.edge_eps)?;
    let an = &ev.analysis;
    let qualitative = qualitative_witness(&ev.chain, an);
    let mut text = format!(
        "{} chain states, {} recurrent classes\n",
        ev.chain.states(),
        an.classes().len()
    );
    let classes: Vec<Value> = an
        .classes()
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let _ = writeln!(
                text,
                "  R{k}: {} states, {}, absorption {:.6}",
                members.len(),
                match an.witness(k) {
                    Some(i) => format!("feasible for pair {i}"),
                    None => "infeasible".to_string(),
                },
                ev.absorption[k]
            );
            json!({
                "members": members,
                "feasible": an.is_feasible(k),
                "pair": an.witness(k),
                "absorption": ev.absorption[k],
            })
        })
        .collect();
    let _ = writeln!(text, "satisfaction probability {:.6}", ev.satisfaction);
    Ok(Outcome {
        result: json!({
            "states": ev.chain.states(),
            "classes": classes,
            "satisfaction": ev.satisfaction,
            "qualitative": qualitative,
        }),
        text,
    })
}

pub fn synthesize(a: &SynthesizeArgs, inputs: &mut Inputs) -> CmdResult {
    if a.g_def == 0 || a.g_adv == 0 {
        return Err(CliError::Usage("controllers need at least one node".into()));
    }
    let p = load_product(inputs, &a.product)?;
    let seeds = seed_structures(&p, a.g_def, a.g_adv)
        .into_iter()
        .map(|(d, v)| Ok((d.with_initial(a.init_def)?, v.with_initial(a.init_adv)?)))
        .collect::<posg_fsc::Result<Vec<(FscStructure, FscStructure)>>>()?;
    let opts = posg_fsc::synthesis::PruneOptions { narrow: a.prune_narrow };
    let set = posg_fsc::synthesis::synthesize(&p, &seeds, opts)?;
    let value = if set.is_empty() {
        None
    } else {
        Some(
            maxmin_select(
                &p,
                &set.candidates,
                MaxMinOptions {
                    exhaustive_adv: a.exhaustive_adv,
                },
            )?
            .value(),
        )
    };
    let candidates = set
        .candidates
        .iter()
        .map(|c| {
            Ok(CandidateDoc {
                def: fsc_doc(&uniform_policy(&c.def)?, p.game()),
                adv: fsc_doc(&uniform_policy(&c.adv)?, p.game()),
                scc: c.scc.clone(),
                pair: c.pair,
                bad: c.bad.clone(),
                good: c.good.clone(),
                witness_class: c.witness_class.clone(),
            })
        })
        .collect::<posg_fsc::Result<Vec<_>>>()?;
    let stats = serde_json::to_value(set.stats).expect("stats serialize");
    write_json(
        &a.output,
        &CandidatesDoc {
            product: p.to_doc(),
            g_def: a.g_def,
            g_adv: a.g_adv,
            narrow: a.prune_narrow,
            stats: stats.clone(),
            candidates,
        },
    )?;
    let mut text = format!(
        "{} candidates from {} (SCC, pair) combinations, written to {}\n",
        set.len(),
        set.stats.iterations,
        a.output.display()
    );
    if let Some(v) = value {
        let _ = writeln!(text, "max-min value over candidates {v:.6}");
    }
    Ok(Outcome {
        result: json!({ "candidates": set.len(), "stats": stats, "value": value, "output": a.output }),
        text,
    })
}

pub fn maxmin(a: &MaxminArgs, inputs: &mut Inputs) -> CmdResult {
    let (p, candidates, _) = load_candidates(inputs, &a.candidates)?;
    let r = maxmin_select(
        &p,
        &candidates,
        MaxMinOptions {
            exhaustive_adv: a.exhaustive_adv,
        },
    )?;
    if let Some(path) = &a.out_def {
        write_json(path, &fsc_doc(&uniform_policy(r.best_defender())?, p.game()))?;
    }
    if let Some(path) = &a.out_adv {
        write_json(path, &fsc_doc(&uniform_policy(r.best_response())?, p.game()))?;
    }
    let mut text = format!(
        "{} defenders against {} adversaries\n",
        r.defenders.len(),
        r.adversaries.len()
    );
    for s in &r.scores {
        let mark = if s.defender == r.best { "*" } else { " " };
        let _ = writeln!(
            text,
            "{mark} defender {}: worst case {:.6} (adversary {})",
            s.defender, s.worst_value, s.worst_adversary
        );
    }
    let _ = writeln!(text, "value {:.6}", r.value());
    Ok(Outcome {
        result: json!({
            "value": r.value(),
            "best": r.best,
            "defenders": r.defenders.len(),
            "adversaries": r.adversaries.len(),
            "scores": r.scores,
        }),
        text,
    })
}

pub fn optimize(a: &OptimizeArgs, inputs: &mut Inputs) -> CmdResult {
    let (p, cd, ca) = load_all(inputs, &a.inputs)?;
    let opts = OptimizeOptions {
        steps: a.steps,
        step_size: a.step_size,
        fd_eps: a.fd_eps,
        seed: a.seed,
        ..OptimizeOptions::default()
    };
    let r = optimize_parameters(&p, cd.structure(), ca.structure(), &opts)?;
    if let Some(path) = &a.out_def {
        write_json(
            path,
            &fsc_doc(&softmax_policy(cd.structure(), &r.def_params)?, p.game()),
        )?;
    }
    if let Some(path) = &a.out_adv {
        write_json(
            path,
            &fsc_doc(&softmax_policy(ca.structure(), &r.adv_params)?, p.game()),
        )?;
    }
    let first = r.trace[0];
    let last = *r.trace.last().expect("trace starts with the initial value");
    let accepted = r.accepted.iter().filter(|&&x| x).count();
    Ok(Outcome {
        result: json!({ "trace": r.trace, "accepted": accepted, "initial": first, "value": last }),
        text: format!(
            "worst-case value {first:.6} -> {last:.6} over {} steps ({accepted} accepted)\n",
            a.steps
        ),
    })
}

pub fn simulate(a: &SimulateArgs, inputs: &mut Inputs) -> CmdResult {
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let (p, cd, ca) = load_all(inputs, &a.inputs)?;
    composed(&p, &cd, &ca)?;
    let ev = evaluate(&p, &cd, &ca, 0.0)?;
    let est = estimate_with(&p, &cd, &ca, &ev.analysis, a.runs, a.seed)?;
    let text = if a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["class", "size", "feasible", "count", "fraction", "absorption"])
            .expect("in-memory write");
        for (k, &n) in est.class_counts.iter().enumerate() {
            w.write_record([
                k.to_string(),
                ev.analysis.classes()[k].len().to_string(),
                ev.analysis.is_feasible(k).to_string(),
                n.to_string(),
                (n as f64 / a.runs as f64).to_string(),
                ev.absorption[k].to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    } else {
        format!(
            "{} of {} runs accepted: {:.6} (95% interval {:.6}..{:.6}); exact {:.6}\n",
            est.accepted, est.runs, est.estimate, est.interval.0, est.interval.1, ev.satisfaction
        )
    };
    Ok(Outcome {
        result: json!({
            "runs": est.runs,
            "accepted": est.accepted,
            "estimate": est.estimate,
            "interval": est.interval,
            "class_counts": est.class_counts,
            "exact": ev.satisfaction,
        }),
        text,
    })
}

pub fn export_dot(a: &ExportDotArgs, inputs: &mut Inputs, json_report: bool) -> CmdResult {
    let (p, cd, ca) = load_all(inputs, &a.inputs)?;
    let chain = composed(&p, &cd, &ca)?;
    let an = RecurrenceAnalysis::of_chain(&chain, a.edge_eps);
    let dot = dot::export_dot(&chain, &an, Some(&p));
    let text = match &a.out {
        Some(path) => {
            std::fs::write(path, &dot).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?;
            format!("wrote {}-state chain to {}\n", chain.states(), path.display())
        }
        None if json_report => String::new(),
        None => dot.clone(),
    };
    Ok(Outcome {
        result: json!({
            "states": chain.states(),
            "classes": an.classes().len(),
            "output": a.out,
            "dot": if a.out.is_none() { Some(dot) } else { None },
        }),
        text,
    })
}
