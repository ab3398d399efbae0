//! Analysis pipelines behind each subcommand.

use std::cell::OnceCell;
use std::path::PathBuf;

use serde::Serialize;
use tenet::corpus::{compute_log_returns, filter_liquidity, load_prices, load_taxonomy, ReturnPanel, SectorTaxonomy};
use tenet::correlate::{offdiag_histogram, pearson_matrix, shuffle_null, CorrelationMatrix, NullBand};
use tenet::embed::classical_mds;
use tenet::entropy::{
    bin_panel, normalize_columns, te_correlation_comparison, te_matrix_expanded, te_quadrant,
    te_shuffle_null, Quadrant, QuadTEMatrix, QuadrantNulls, TeCorrelationComparison,
};
use tenet::io;
use tenet::matrix::{LabeledMatrix, Variable};
use tenet::netmetrics::{
    asset_graph, connected_components, correlation_distance, in_out_node_strength, node_strength, sector_index,
    te_distance, to_dot, to_graphml, DistanceMatrix,
};
use tenet::shockwave::{
    group_shock, rank_descending, shock_propagation_strength, single_stock_shock, PropagationMatrix, ShockTrajectory,
};
use tenet::windows::{mean_volatility, rolling_mean_correlation, rolling_mean_te, semester_correlations, semester_te, volatility_panel};

use crate::config::{Analysis, QuadrantChoice, RunConfig, ShockTarget, Source};
use crate::error::CliError;
use crate::output::OutputSet;

type Res<T> = Result<T, CliError>;

/// Loaded inputs plus results shared between analyses of one run.
pub struct Session<'a> {
    cfg: &'a RunConfig,
    returns: ReturnPanel<f64>,
    taxonomy: Option<SectorTaxonomy>,
    ingest: IngestSummary,
    corr: OnceCell<CorrelationMatrix<f64>>,
    expanded: OnceCell<QuadTEMatrix<f64>>,
    s21: OnceCell<LabeledMatrix<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub raw_dates: usize,
    pub raw_tickers: usize,
    pub missing_cells: usize,
    pub kept_tickers: usize,
    pub dropped_tickers: Vec<String>,
    pub return_rows: usize,
    pub first_date: Option<String>,
    pub last_date: Option<String>,
}

impl<'a> Session<'a> {
    pub fn load(cfg: &'a RunConfig) -> Res<Session<'a>> {
        let path = cfg.prices.as_ref().expect("validated");
        let prices = load_prices::<f64>(path)?;
        let liquid = filter_liquidity(&prices, cfg.min_presence);
        let dropped: Vec<String> =
            prices.tickers().iter().filter(|t| !liquid.tickers().contains(t)).cloned().collect();
        let returns = compute_log_returns(&liquid)?;
        tracing::info!(tickers = returns.n_vars(), rows = returns.n_rows(), dropped = dropped.len(), "loaded prices");
        let taxonomy = cfg.taxonomy.as_ref().map(load_taxonomy).transpose()?;
        let ingest = IngestSummary {
            raw_dates: prices.dates().len(),
            raw_tickers: prices.tickers().len(),
            missing_cells: prices.missing_count(),
            kept_tickers: returns.n_vars(),
            dropped_tickers: dropped,
            return_rows: returns.n_rows(),
            first_date: returns.dates().first().map(|d| d.to_string()),
            last_date: returns.dates().last().map(|d| d.to_string()),
        };
        Ok(Session {
            cfg,
            returns,
            taxonomy,
            ingest,
            corr: OnceCell::new(),
            expanded: OnceCell::new(),
            s21: OnceCell::new(),
        })
    }

    fn corr(&self) -> Res<&CorrelationMatrix<f64>> {
        if let Some(c) = self.corr.get() {
            return Ok(c);
        }
        let c = pearson_matrix(&self.returns)?;
        Ok(self.corr.get_or_init(|| c))
    }

    fn expanded(&self) -> Res<&QuadTEMatrix<f64>> {
        if let Some(q) = self.expanded.get() {
            return Ok(q);
        }
        let d = bin_panel(&self.returns, self.cfg.bin_width)?.lag_expand()?;
        let q = te_matrix_expanded(&d)?;
        Ok(self.expanded.get_or_init(|| q))
    }

    fn s21(&self) -> Res<&LabeledMatrix<f64>> {
        if let Some(s) = self.s21.get() {
            return Ok(s);
        }
        let s = match self.expanded.get() {
            Some(q) => q.s21(),
            None => te_quadrant(&bin_panel(&self.returns, self.cfg.bin_width)?.lag_expand()?, Quadrant::S21)?,
        };
        Ok(self.s21.get_or_init(|| s))
    }

    fn taxonomy(&self) -> Res<&SectorTaxonomy> {
        self.taxonomy.as_ref().ok_or_else(|| CliError::Usage("a taxonomy file is required".into()))
    }
}

pub fn execute(cfg: &RunConfig, out: &mut OutputSet) -> Res<Vec<PathBuf>> {
    if cfg.analysis == Analysis::Synth {
        synth(cfg, out)?;
        return Ok(Vec::new());
    }
    let session = Session::load(cfg)?;
    match cfg.analysis {
        Analysis::Ingest => ingest(&session, out)?,
        Analysis::Corr => corr(&session, out).map(|_| ())?,
        Analysis::Te => te(&session, out).map(|_| ())?,
        Analysis::Net => net(&session, cfg.source, out)?,
        Analysis::Embed => embed(&session, cfg.source, out).map(|_| ())?,
        Analysis::Windows => windows(&session, out)?,
        Analysis::Shock => shock(&session, out)?,
        Analysis::Report => report(&session, out)?,
        Analysis::Synth => unreachable!(),
    }
    let mut inputs: Vec<PathBuf> = cfg.prices.iter().cloned().collect();
    inputs.extend(cfg.taxonomy.iter().cloned());
    Ok(inputs)
}

fn synth(cfg: &RunConfig, out: &mut OutputSet) -> Res<()> {
    let (prices, taxonomy) = tenet::synthetic::synthetic_market(cfg.stocks, cfg.days, cfg.seed);
    out.write_with("prices.csv", |w| io::write_prices_csv(&prices, w))?;
    out.write_with("taxonomy.csv", |w| io::write_taxonomy_csv(&taxonomy, prices.tickers(), w))
}

fn ingest(s: &Session, out: &mut OutputSet) -> Res<()> {
    out.write_with("returns.csv", |w| io::write_returns_csv(&s.returns, w))?;
    out.write_json("ingest.json", &s.ingest)
}

#[derive(Serialize)]
struct CorrSummary {
    n_stocks: usize,
    n_rows: usize,
    offdiag_min: f64,
    offdiag_max: f64,
    offdiag_mean: f64,
    smallest_eigenvalue: f64,
    null: Option<NullBand>,
}

fn extremes(values: &[f64]) -> (f64, f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / values.len() as f64 };
    (lo, hi, mean)
}

fn write_strengths(out: &mut OutputSet, name: &str, variables: &[Variable], values: &ndarray::Array1<f64>) -> Res<()> {
    out.write_with(name, |w| io::write_ranking_csv(variables, values, w))
}

fn corr(s: &Session, out: &mut OutputSet) -> Res<CorrSummary> {
    let c = s.corr()?;
    out.write_with("correlation.csv", |w| io::write_matrix_csv(c.matrix(), w))?;
    write_strengths(out, "correlation_strength.csv", c.variables(), &node_strength(c))?;
    let hist = offdiag_histogram(c, s.cfg.histogram_bins)?;
    out.write_with("correlation_histogram.csv", |w| {
        let mut text = String::from("lower,upper,count\n");
        for (k, count) in hist.counts.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", hist.edges[k], hist.edges[k + 1], count));
        }
        crate::output::flush_into(w, &text)
    })?;
    let null = if s.cfg.corr_sims > 0 { Some(shuffle_null(&s.returns, s.cfg.corr_sims, s.cfg.seed)?) } else { None };
    let (lo, hi, mean) = extremes(&c.matrix().off_diagonal());
    let summary = CorrSummary {
        n_stocks: c.len(),
        n_rows: s.returns.n_rows(),
        offdiag_min: lo,
        offdiag_max: hi,
        offdiag_mean: mean,
        smallest_eigenvalue: c.smallest_eigenvalue(),
        null,
    };
    out.write_json("correlation.json", &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct TeSummary {
    bin_width: f64,
    s21_offdiag_min: f64,
    s21_offdiag_max: f64,
    s21_offdiag_mean: f64,
    excess_min: f64,
    excess_max: f64,
    versus_correlation: Option<TeCorrelationComparison>,
    null: Option<QuadrantNulls>,
}

fn te(s: &Session, out: &mut OutputSet) -> Res<TeSummary> {
    match s.cfg.quadrant {
        QuadrantChoice::All => {
            let q = s.expanded()?;
            let full = LabeledMatrix::new(q.variables().to_vec(), q.values().clone())?;
            out.write_with("te_expanded.csv", |w| io::write_matrix_csv(&full, w))?;
            for quad in Quadrant::ALL {
                let m = q.quadrant(quad);
                out.write_with(&format!("te_{}.csv", quad.name().to_lowercase()), |w| io::write_matrix_csv(&m, w))?;
            }
        }
        QuadrantChoice::One(Quadrant::S21) => {}
        QuadrantChoice::One(quad) => {
            let d = bin_panel(&s.returns, s.cfg.bin_width)?.lag_expand()?;
            let m = te_quadrant(&d, quad)?;
            out.write_with(&format!("te_{}.csv", quad.name().to_lowercase()), |w| io::write_matrix_csv(&m, w))?;
        }
    }
    let s21 = s.s21()?;
    if s.cfg.quadrant == QuadrantChoice::One(Quadrant::S21) {
        out.write_with("te_s21.csv", |w| io::write_matrix_csv(s21, w))?;
    }
    let normalized = normalize_columns(s21)?;
    out.write_with("te_s21_normalized.csv", |w| io::write_matrix_csv(&normalized, w))?;
    let excess = tenet::entropy::antisymmetric_part(s21);
    out.write_with("excess_te.csv", |w| io::write_matrix_csv(&excess, w))?;
    let strengths = in_out_node_strength(s21);
    out.write_with("te_strength.csv", |w| {
        let mut text = String::from("variable,in_strength,out_strength\n");
        for (i, v) in s21.variables().iter().enumerate() {
            text.push_str(&format!("{v},{},{}\n", strengths.in_strength[i], strengths.out_strength[i]));
        }
        crate::output::flush_into(w, &text)
    })?;
    let versus_correlation = match s.corr() {
        Ok(c) => Some(te_correlation_comparison(s21, c)?),
        Err(e) => {
            tracing::warn!("correlation comparison skipped: {e}");
            None
        }
    };
    let null = if s.cfg.te_sims > 0 {
        Some(te_shuffle_null(&bin_panel(&s.returns, s.cfg.bin_width)?, s.cfg.te_sims, s.cfg.seed)?)
    } else {
        None
    };
    let (lo, hi, mean) = extremes(&s21.off_diagonal());
    let (elo, ehi, _) = extremes(&excess.off_diagonal());
    let summary = TeSummary {
        bin_width: s.cfg.bin_width,
        s21_offdiag_min: lo,
        s21_offdiag_max: hi,
        s21_offdiag_mean: mean,
        excess_min: elo,
        excess_max: ehi,
        versus_correlation,
        null,
    };
    out.write_json("te.json", &summary)?;
    Ok(summary)
}

fn source_matrix(s: &Session, source: Source) -> Res<LabeledMatrix<f64>> {
    Ok(match source {
        Source::Corr => s.corr()?.matrix().clone(),
        Source::Te => normalize_columns(s.s21()?)?,
    })
}

#[derive(Serialize)]
struct NetSummary {
    source: Source,
    threshold: f64,
    directed: bool,
    nodes: usize,
    edges: usize,
    components: Vec<usize>,
}

fn net(s: &Session, source: Source, out: &mut OutputSet) -> Res<()> {
    let prefix = source.name();
    let matrix = source_matrix(s, source)?;
    let (threshold, directed) = match source {
        Source::Corr => (s.cfg.corr_threshold, false),
        Source::Te => (s.cfg.te_threshold, true),
    };
    let graph = asset_graph(&matrix, threshold, directed)?;
    out.write_bytes(&format!("{prefix}_graph.graphml"), to_graphml(&graph, s.taxonomy.as_ref()).as_bytes())?;
    out.write_bytes(&format!("{prefix}_graph.dot"), to_dot(&graph, s.taxonomy.as_ref()).as_bytes())?;
    let comps = connected_components(&graph);
    let mut text = String::from("component,variable\n");
    for (k, members) in comps.iter().enumerate() {
        for &m in members {
            text.push_str(&format!("{},{}\n", k + 1, graph.nodes[m]));
        }
    }
    out.write_bytes(&format!("{prefix}_components.csv"), text.as_bytes())?;
    let summary = NetSummary {
        source,
        threshold,
        directed,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        components: comps.iter().map(Vec::len).collect(),
    };
    out.write_json(&format!("{prefix}_graph.json"), &summary)?;
    let wanted = s.cfg.sector_index || (s.cfg.analysis == Analysis::Report && s.taxonomy.is_some());
    if wanted && source == Source::Corr {
        let (index, meta) = sector_index(&s.returns, s.taxonomy()?)?;
        out.write_with("sector_index.csv", |w| io::write_returns_csv(&index, w))?;
        let mut text = String::from("sector,variable,weight\n");
        for m in &meta {
            for (t, w) in m.members.iter().zip(m.weights.iter()) {
                text.push_str(&format!("{},{t},{w}\n", m.sector));
            }
        }
        out.write_bytes("sector_weights.csv", text.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EmbedSummary {
    source: Source,
    dims: usize,
    stress: f64,
    truncated_count: usize,
    truncated_mass: f64,
    clamped: usize,
}

fn embed(s: &Session, source: Source, out: &mut OutputSet) -> Res<f64> {
    let (dist, clamped): (DistanceMatrix<f64>, usize) = match source {
        Source::Corr => (correlation_distance(s.corr()?), 0),
        Source::Te => {
            let td = te_distance(&source_matrix(s, Source::Te)?);
            (td.distance, td.clamped)
        }
    };
    let emb = classical_mds(&dist, s.cfg.dims)?;
    let prefix = source.name();
    out.write_with(&format!("{prefix}_coords.csv"), |w| io::write_coords_csv(&emb, w))?;
    out.write_json(
        &format!("{prefix}_embedding.json"),
        &EmbedSummary {
            source,
            dims: emb.dims(),
            stress: emb.stress,
            truncated_count: emb.truncated_count,
            truncated_mass: emb.truncated_mass,
            clamped,
        },
    )?;
    Ok(emb.stress)
}

#[derive(Serialize)]
struct SkippedEntry {
    anchor_date: String,
    variable: String,
}

#[derive(Serialize)]
struct WindowsSummary {
    width: usize,
    step: usize,
    windows: usize,
    skipped: Vec<SkippedEntry>,
}

fn windows(s: &Session, out: &mut OutputSet) -> Res<()> {
    let cfg = s.cfg;
    let corr = rolling_mean_correlation(&s.returns, cfg.width, cfg.step)?;
    let te = rolling_mean_te(&s.returns, cfg.width, cfg.step, cfg.bin_width)?;
    out.write_with("window_means.csv", |w| {
        io::write_window_means(&[("mean_correlation", &corr), ("mean_te_in", &te.incoming), ("mean_te_out", &te.outgoing)], w)
    })?;
    let vol = volatility_panel(&s.returns);
    out.write_with("volatility.csv", |w| io::write_per_variable(s.returns.dates(), s.returns.variables(), "volatility", &vol, w))?;
    let mean_vol = tenet::windows::WindowSeries {
        anchor_dates: s.returns.dates().to_vec(),
        values: mean_volatility(&s.returns),
        skipped: Vec::new(),
    };
    out.write_with("mean_volatility.csv", |w| io::write_window_means(&[("mean_volatility", &mean_vol)], w))?;
    if cfg.semesters {
        let n = s.returns.n_vars() as f64;
        let mut text = String::from("semester,statistic,value\n");
        for sc in semester_correlations(&s.returns)? {
            let v = node_strength(&sc.matrix).mean().unwrap_or(f64::NAN) / n;
            text.push_str(&format!("{},mean_correlation,{v}\n", sc.label));
        }
        for st in semester_te(&s.returns, cfg.semester_bin_width)? {
            let strengths = in_out_node_strength(&st.s21);
            let inc = strengths.in_strength.mean().unwrap_or(f64::NAN) / n;
            let outg = strengths.out_strength.mean().unwrap_or(f64::NAN) / n;
            text.push_str(&format!("{},mean_te_in,{inc}\n{},mean_te_out,{outg}\n", st.label, st.label));
        }
        out.write_bytes("semesters.csv", text.as_bytes())?;
    }
    let summary = WindowsSummary {
        width: cfg.width,
        step: cfg.step,
        windows: corr.len() + corr.skipped.len(),
        skipped: corr
            .skipped
            .iter()
            .map(|k| SkippedEntry { anchor_date: k.anchor_date.to_string(), variable: k.variable.clone() })
            .collect(),
    };
    out.write_json("windows.json", &summary)
}

fn propagation(s: &Session) -> Res<PropagationMatrix<f64>> {
    Ok(PropagationMatrix::from_matrix(s.s21()?.clone())?)
}

fn stock_index(mte: &PropagationMatrix<f64>, ticker: &str) -> Res<usize> {
    mte.matrix()
        .index_of(ticker)
        .ok_or_else(|| CliError::Core(tenet::Error::UnknownVariable(ticker.to_string())))
}

fn sector_members(s: &Session, mte: &PropagationMatrix<f64>, sector: &str) -> Res<Vec<usize>> {
    let tax = s.taxonomy()?;
    let mut members = Vec::new();
    for (i, v) in mte.variables().iter().enumerate() {
        if tax.sector_of(&v.ticker)? == sector {
            members.push(i);
        }
    }
    if members.is_empty() {
        return Err(CliError::Core(tenet::Error::UnknownVariable(format!("sector {sector}"))));
    }
    Ok(members)
}

fn write_trajectory(out: &mut OutputSet, name: &str, t: &ShockTrajectory<f64>) -> Res<()> {
    out.write_with(name, |w| io::write_trajectory_csv(t, w))
}

fn strength_ranking(s: &Session, mte: &PropagationMatrix<f64>, out: &mut OutputSet) -> Res<Vec<(String, f64)>> {
    let strengths = shock_propagation_strength(mte, s.cfg.single_magnitude(), s.cfg.peak_day)?;
    write_strengths(out, "shock_strength.csv", mte.variables(), &strengths)?;
    Ok(rank_descending(&strengths).into_iter().map(|i| (mte.variables()[i].to_string(), strengths[i])).collect())
}

fn shock(s: &Session, out: &mut OutputSet) -> Res<()> {
    let mte = propagation(s)?;
    let cfg = s.cfg;
    if let Some(target) = &cfg.shock_target {
        let trajectory = match target {
            ShockTarget::Stock(t) => single_stock_shock(&mte, stock_index(&mte, t)?, cfg.single_magnitude(), cfg.horizon)?,
            ShockTarget::Sector(name) => group_shock(&mte, &sector_members(s, &mte, name)?, cfg.group_magnitude(), cfg.horizon)?,
            ShockTarget::Systemic => {
                let all: Vec<usize> = (0..mte.len()).collect();
                group_shock(&mte, &all, cfg.group_magnitude(), cfg.horizon)?
            }
        };
        write_trajectory(out, "trajectory.csv", &trajectory)?;
    }
    if cfg.rank {
        strength_ranking(s, &mte, out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Report {
    ingest: IngestSummary,
    correlation: CorrSummary,
    transfer_entropy: TeSummary,
    corr_stress: f64,
    te_stress: f64,
    top_shock_origins: Vec<(String, f64)>,
    systemic_mean_volatility: Vec<f64>,
    sector_mean_volatility: Vec<(String, Vec<f64>)>,
}

fn report(s: &Session, out: &mut OutputSet) -> Res<()> {
    // The full expanded matrix serves every TE consumer below.
    s.expanded()?;
    ingest(s, out)?;
    let correlation = corr(s, out)?;
    let transfer_entropy = te(s, out)?;
    net(s, Source::Corr, out)?;
    net(s, Source::Te, out)?;
    let corr_stress = embed(s, Source::Corr, out)?;
    let te_stress = embed(s, Source::Te, out)?;
    windows(s, out)?;
    let mte = propagation(s)?;
    let all: Vec<usize> = (0..mte.len()).collect();
    let systemic = group_shock(&mte, &all, s.cfg.group_magnitude(), s.cfg.horizon)?;
    write_trajectory(out, "systemic_trajectory.csv", &systemic)?;
    let ranking = strength_ranking(s, &mte, out)?;
    let mut sector_mean_volatility = Vec::new();
    if let Some(tax) = &s.taxonomy {
        let tickers: Vec<String> = mte.variables().iter().map(|v| v.ticker.clone()).collect();
        for (sector, _) in tax.group_by_sector(&tickers)? {
            let t = group_shock(&mte, &sector_members(s, &mte, &sector)?, s.cfg.group_magnitude(), s.cfg.horizon)?;
            sector_mean_volatility.push((sector, (0..=t.horizon()).map(|k| t.mean_at(k)).collect()));
        }
    }
    let report = Report {
        ingest: s.ingest.clone(),
        correlation,
        transfer_entropy,
        corr_stress,
        te_stress,
        top_shock_origins: ranking.into_iter().take(10).collect(),
        systemic_mean_volatility: (0..=systemic.horizon()).map(|k| systemic.mean_at(k)).collect(),
        sector_mean_volatility,
    };
    out.write_json("report.json", &report)
}
